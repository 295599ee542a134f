#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "wqcascade/cascade.hpp"
#include "wqcascade/dataio.hpp"
#include "wqcascade/eval.hpp"

namespace wqcascade {

enum class ReportFormat { Csv, Json, Markdown };

/// "csv", "json" or "markdown" ("md"); ConfigError otherwise.
ReportFormat parse_report_format(std::string_view name);
std::string_view to_string(ReportFormat format);
/// File extension without the dot.
std::string_view extension(ReportFormat format);

/// Embedded in every emitted artifact when `config_hash` is non-empty.
struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
};

std::string emit_report(const SingleModelReport& report, ReportFormat format, const Provenance& prov = {});
std::string emit_report(const SweepCurve& curve, ReportFormat format, const Provenance& prov = {});
std::string emit_report(std::span<const CascadeSummary> summaries, ReportFormat format, const Provenance& prov = {});
std::string emit_report(const CascadeReport& report, ReportFormat format, const Provenance& prov = {});
std::string emit_report(std::span<const StationStats> stats, ReportFormat format, const Provenance& prov = {});

/// Per-record verdicts: id, station, ecoli, verdict, stage, rule, p_1..p_N.
std::string emit_predictions(const Dataset& d, std::span<const CascadePrediction> predictions, std::size_t n_stages,
                             const Provenance& prov = {});

/// Accuracy and TP-rate series against the limit. ConfigError on an empty
/// curve.
std::string emit_plot(const SweepCurve& curve, const Provenance& prov = {});

/// Shortest decimal that round-trips.
std::string format_number(double v);

}  // namespace wqcascade
