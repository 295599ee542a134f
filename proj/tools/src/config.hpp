#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <wqcascade/cascade.hpp>
#include <wqcascade/forest.hpp>
#include <wqcascade/report.hpp>
#include <wqcascade/splits.hpp>
#include <wqcascade/synth.hpp>

namespace wqcascade::cli {

enum class ModelKind { Single, Cascade };

/// Raw "section.key" -> value pairs. Later layers override earlier ones.
using Settings = std::map<std::string, std::string>;

/// Reads an INI-style file (sections and key = value lines). IoError when
/// unreadable, ConfigError on a syntax error or an unknown key.
Settings read_settings_file(const std::filesystem::path& path);

/// Fully resolved run configuration.
struct RunConfig {
    std::optional<std::filesystem::path> data;
    bool use_synth = false;
    SynthConfig synth = SynthConfig::calibrated();
    bool drop_outliers = true;
    std::optional<std::size_t> thin;

    /// Absent for "none": the whole dataset is the training set.
    std::optional<SplitSpec> split = SplitSpec::set1();
    StationGroup group = StationGroup::defaults(GroupName::All);

    ModelKind kind = ModelKind::Cascade;
    ForestParams forest;
    std::size_t stages = 6;
    std::size_t min_stage_size = kDefaultMinStageSize;

    ThresholdPolicy policy;
    /// Set when the policy came from the settings rather than defaults.
    bool policy_explicit = false;

    double limit = 250.0;
    /// Empty selects evenly spaced percentiles of the training data.
    std::vector<double> limits;
    std::size_t n_runs = 20;
    std::uint64_t seed = 0;

    std::optional<std::filesystem::path> model;
    std::filesystem::path out = ".";
    std::vector<ReportFormat> formats{ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown};
    unsigned threads = 0;
};

/// ConfigError on an unknown key, a malformed value, or both a dataset path
/// and synthetic data.
RunConfig resolve(const Settings& settings);

/// Canonical INI text of every resolved value, in fixed order.
std::string to_ini(const RunConfig& cfg);

/// SHA-256 (hex) of the canonical text without the output directory and
/// thread count, which do not affect results.
std::string config_hash(const RunConfig& cfg);

std::vector<std::string> known_keys();

}  // namespace wqcascade::cli
