#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wqcascade {

using Timestamp = std::chrono::sys_seconds;

/// One sampling event at a bathing station.
struct Measurement {
    std::uint64_t id = 0;
    std::string station;
    Timestamp timestamp{};
    double salinity = 0.0;    // PSU
    double water_temp = 0.0;  // deg C
    double air_temp = 0.0;    // deg C
    double ghi = 0.0;         // W/m^2
    double ghi_cum4h = 0.0;   // Wh/m^2 over the previous 4 h
    double rain_4_7d = 0.0;   // mm
    double rain_7_14d = 0.0;  // mm
    std::int64_t ecoli = 0;   // CFU/100 mL
    bool outlier = false;

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

struct Dataset {
    std::vector<Measurement> records;
    std::string provenance;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
};

struct ParseResult {
    Dataset dataset;
    std::vector<std::string> warnings;
};

/// Exact CSV header of the dataset format.
inline constexpr std::string_view kDatasetHeader =
    "id,station,timestamp,salinity,water_temp,air_temp,ghi,ghi_cum4h,rain_4_7d,rain_7_14d,ecoli,outlier";

/// Parses the dataset CSV. Empty rainfall cells become 0 and add a warning;
/// any other empty or malformed cell raises ParseError, and a record that
/// breaks a Measurement invariant raises ValidationError. Both name the line.
ParseResult parse_dataset(std::istream& in, std::string provenance = {});
ParseResult parse_dataset(std::string_view csv_text, std::string provenance = {});

/// Reads and parses a file; IoError when it cannot be opened.
ParseResult read_dataset_file(const std::filesystem::path& path);

void write_dataset(std::ostream& out, const Dataset& d);
std::string serialize_dataset(const Dataset& d);
void write_dataset_file(const std::filesystem::path& path, const Dataset& d);

/// Throws ValidationError if `m` breaks a field invariant.
void validate_measurement(const Measurement& m);

/// Throws ValidationError on duplicate ids or invalid records.
void validate_dataset(const Dataset& d);

std::string format_timestamp(Timestamp t);
/// Accepts `YYYY-MM-DDThh:mm:ssZ`; throws ConfigError otherwise.
Timestamp parse_timestamp(std::string_view text);
int year_of(Timestamp t);

/// Records whose outlier flag is clear, in input order.
Dataset remove_outliers(const Dataset& d);

struct StationStats {
    std::string station;
    std::size_t n = 0;
    double ecoli_mean = 0.0;
    double ecoli_median = 0.0;
    double salinity_mean = 0.0;
    double salinity_median = 0.0;
};

/// One entry per distinct station, sorted by station code.
std::vector<StationStats> station_stats(const Dataset& d);

enum class Label : std::uint8_t { Below = 0, Above = 1 };

/// Ties at the limit are Below.
constexpr Label label_for(std::int64_t ecoli, double limit) noexcept {
    return static_cast<double>(ecoli) > limit ? Label::Above : Label::Below;
}

/// Names of the numeric predictor columns.
namespace feature {
inline constexpr std::string_view kSalinity = "salinity";
inline constexpr std::string_view kWaterTemp = "water_temp";
inline constexpr std::string_view kAirTemp = "air_temp";
inline constexpr std::string_view kGhi = "ghi";
inline constexpr std::string_view kGhiCum4h = "ghi_cum4h";
inline constexpr std::string_view kRain4To7 = "rain_4_7d";
inline constexpr std::string_view kRain7To14 = "rain_7_14d";
}  // namespace feature

/// salinity, water_temp, air_temp, ghi, ghi_cum4h.
std::vector<std::string> default_features();
/// default_features() plus both rainfall sums.
std::vector<std::string> all_features();

bool is_feature_name(std::string_view name) noexcept;
/// ConfigError for an unknown name.
double feature_value(const Measurement& m, std::string_view name);
std::vector<double> extract_features(const Measurement& m, std::span<const std::string> names);

/// Records labeled against a concentration limit with a row-major feature
/// matrix restricted to `feature_names`.
struct LabeledDataset {
    double limit = 0.0;
    std::vector<std::string> feature_names;
    std::vector<double> features;
    std::vector<Label> labels;
    std::vector<std::int64_t> ecoli;
    std::vector<std::uint64_t> ids;

    std::size_t rows() const noexcept { return labels.size(); }
    std::size_t cols() const noexcept { return feature_names.size(); }
    double at(std::size_t row, std::size_t col) const noexcept { return features[row * cols() + col]; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {features.data() + r * cols(), cols()};
    }
    std::size_t count(Label l) const noexcept;
};

LabeledDataset label(const Dataset& d, double limit, std::span<const std::string> features);

/// As label() but accepts any non-negative threshold, including 0. Used for
/// relabeling against a data-derived median.
LabeledDataset relabel(const Dataset& d, double threshold, std::span<const std::string> features);

}  // namespace wqcascade
