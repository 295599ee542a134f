#pragma once

#include <cstddef>
#include <functional>

namespace wqcascade {

/// Resolves a requested worker count; 0 means all available cores.
unsigned resolve_threads(unsigned requested) noexcept;

/// Calls fn(i) for every i in [0, n) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace wqcascade
