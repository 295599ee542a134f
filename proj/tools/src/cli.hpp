#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wqcascade::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitIo = 2;

/// Runs one subcommand. `args` excludes the program name. Diagnostics go
/// to `err`, summaries and help to `out`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wqcascade::cli
