#include "wqcascade/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "wqcascade/error.hpp"
#include "wqcascade/stats.hpp"

namespace wqcascade {
namespace {

constexpr std::array<std::string_view, 12> kColumns = {
    "id",        "station",   "timestamp", "salinity", "water_temp", "air_temp",
    "ghi",       "ghi_cum4h", "rain_4_7d", "rain_7_14d", "ecoli",    "outlier"};

enum Column : std::size_t {
    kId, kStation, kTime, kSalinity, kWaterTemp, kAirTemp, kGhi, kGhiCum, kRain47, kRain714, kEcoli, kOutlier
};

struct FeatureField {
    std::string_view name;
    double Measurement::*member;
};

constexpr std::array<FeatureField, 7> kFeatureFields = {{
    {feature::kSalinity, &Measurement::salinity},
    {feature::kWaterTemp, &Measurement::water_temp},
    {feature::kAirTemp, &Measurement::air_temp},
    {feature::kGhi, &Measurement::ghi},
    {feature::kGhiCum4h, &Measurement::ghi_cum4h},
    {feature::kRain4To7, &Measurement::rain_4_7d},
    {feature::kRain7To14, &Measurement::rain_7_14d},
}};

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string cell_context(std::size_t line, std::size_t col) {
    std::ostringstream os;
    os << "line " << line << ", column " << (col + 1) << " (" << kColumns[col] << ")";
    return os.str();
}

[[noreturn]] void fail_cell(std::size_t line, std::size_t col, std::string_view why) {
    throw ParseError(line, col + 1, cell_context(line, col) + ": " + std::string(why));
}

double parse_real(std::string_view text, std::size_t line, std::size_t col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail_cell(line, col, "expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

template <typename Int>
Int parse_int(std::string_view text, std::size_t line, std::size_t col) {
    Int v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail_cell(line, col, "expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

void append_real(std::string& out, double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), ptr);
}

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len, bool& ok) {
    int v = 0;
    if (pos + len > s.size()) {
        ok = false;
        return 0;
    }
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') {
            ok = false;
            return 0;
        }
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    // YYYY-MM-DDThh:mm:ssZ
    bool ok = text.size() == 20 && text[4] == '-' && text[7] == '-' && text[10] == 'T' && text[13] == ':' &&
              text[16] == ':' && text[19] == 'Z';
    int y = parse_fixed(text, 0, 4, ok);
    int mo = parse_fixed(text, 5, 2, ok);
    int d = parse_fixed(text, 8, 2, ok);
    int h = parse_fixed(text, 11, 2, ok);
    int mi = parse_fixed(text, 14, 2, ok);
    int s = parse_fixed(text, 17, 2, ok);
    if (!ok) {
        throw ConfigError("timestamp '" + std::string(text) + "' is not YYYY-MM-DDThh:mm:ssZ");
    }
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
        throw ConfigError("timestamp '" + std::string(text) + "' is not a valid date-time");
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss hms{t - day_point};
    std::array<char, 48> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return std::string(buf.data());
}

int year_of(Timestamp t) {
    using namespace std::chrono;
    return static_cast<int>(year_month_day{floor<days>(t)}.year());
}

void validate_measurement(const Measurement& m) {
    auto bad = [&](const std::string& why) {
        throw ValidationError("record " + std::to_string(m.id) + ": " + why);
    };
    if (m.station.empty()) bad("station code is empty");
    if (m.ecoli < 0) bad("ecoli must be non-negative");
    if (!(m.salinity >= 0.0 && m.salinity <= 45.0)) bad("salinity must lie in [0, 45]");
    if (!(m.ghi >= 0.0)) bad("ghi must be non-negative");
    if (!(m.ghi_cum4h >= 0.0)) bad("ghi_cum4h must be non-negative");
    if (!(m.rain_4_7d >= 0.0)) bad("rain_4_7d must be non-negative");
    if (!(m.rain_7_14d >= 0.0)) bad("rain_7_14d must be non-negative");
    if (!std::isfinite(m.water_temp) || !std::isfinite(m.air_temp)) bad("temperatures must be finite");
}

void validate_dataset(const Dataset& d) {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(d.records.size());
    for (const auto& m : d.records) {
        validate_measurement(m);
        if (!seen.insert(m.id).second) {
            throw ValidationError("duplicate record id " + std::to_string(m.id));
        }
    }
}

ParseResult parse_dataset(std::istream& in, std::string provenance) {
    ParseResult result;
    result.dataset.provenance = std::move(provenance);
    std::unordered_set<std::uint64_t> seen;
    std::string raw;
    std::size_t line_no = 0;
    bool have_header = false;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (!have_header) {
            if (line != kDatasetHeader) {
                throw ParseError(line_no, 0, "line " + std::to_string(line_no) + ": expected header '" +
                                                 std::string(kDatasetHeader) + "'");
            }
            have_header = true;
            continue;
        }

        auto fields = split_fields(line);
        if (fields.size() != kColumns.size()) {
            throw ParseError(line_no, 0,
                             "line " + std::to_string(line_no) + ": expected " + std::to_string(kColumns.size()) +
                                 " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (fields[c].empty() && c != kRain47 && c != kRain714) fail_cell(line_no, c, "missing value");
        }

        Measurement m;
        m.id = parse_int<std::uint64_t>(fields[kId], line_no, kId);
        m.station = std::string(fields[kStation]);
        try {
            m.timestamp = parse_timestamp(fields[kTime]);
        } catch (const ConfigError& e) {
            fail_cell(line_no, kTime, e.what());
        }
        m.salinity = parse_real(fields[kSalinity], line_no, kSalinity);
        m.water_temp = parse_real(fields[kWaterTemp], line_no, kWaterTemp);
        m.air_temp = parse_real(fields[kAirTemp], line_no, kAirTemp);
        m.ghi = parse_real(fields[kGhi], line_no, kGhi);
        m.ghi_cum4h = parse_real(fields[kGhiCum], line_no, kGhiCum);
        for (std::size_t c : {std::size_t{kRain47}, std::size_t{kRain714}}) {
            double v = 0.0;
            if (fields[c].empty()) {
                result.warnings.push_back(cell_context(line_no, c) + ": missing rainfall, using 0 mm");
            } else {
                v = parse_real(fields[c], line_no, c);
            }
            (c == kRain47 ? m.rain_4_7d : m.rain_7_14d) = v;
        }
        m.ecoli = parse_int<std::int64_t>(fields[kEcoli], line_no, kEcoli);
        auto flag = fields[kOutlier];
        if (flag != "0" && flag != "1") fail_cell(line_no, kOutlier, "expected 0 or 1");
        m.outlier = flag == "1";

        try {
            validate_measurement(m);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen.insert(m.id).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate record id " + std::to_string(m.id));
        }
        result.dataset.records.push_back(std::move(m));
    }
    if (!have_header) {
        throw ParseError(1, 0, "line 1: missing header");
    }
    return result;
}

ParseResult parse_dataset(std::string_view csv_text, std::string provenance) {
    std::istringstream in{std::string(csv_text)};
    return parse_dataset(in, std::move(provenance));
}

ParseResult read_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
    return parse_dataset(in, path.string());
}

void write_dataset(std::ostream& out, const Dataset& d) {
    std::string text;
    text.reserve(64 + d.records.size() * 96);
    text.append(kDatasetHeader);
    text.push_back('\n');
    for (const auto& m : d.records) {
        if (m.station.find_first_of(",\n\r\"") != std::string::npos) {
            throw ValidationError("station code '" + m.station + "' cannot be written to CSV");
        }
        text += std::to_string(m.id);
        text.push_back(',');
        text += m.station;
        text.push_back(',');
        text += format_timestamp(m.timestamp);
        for (double v : {m.salinity, m.water_temp, m.air_temp, m.ghi, m.ghi_cum4h, m.rain_4_7d, m.rain_7_14d}) {
            text.push_back(',');
            append_real(text, v);
        }
        text.push_back(',');
        text += std::to_string(m.ecoli);
        text.push_back(',');
        text.push_back(m.outlier ? '1' : '0');
        text.push_back('\n');
    }
    out << text;
}

std::string serialize_dataset(const Dataset& d) {
    std::ostringstream os;
    write_dataset(os, d);
    return os.str();
}

void write_dataset_file(const std::filesystem::path& path, const Dataset& d) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
    write_dataset(out, d);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset remove_outliers(const Dataset& d) {
    Dataset out;
    out.provenance = d.provenance;
    std::copy_if(d.records.begin(), d.records.end(), std::back_inserter(out.records),
                 [](const Measurement& m) { return !m.outlier; });
    return out;
}

std::vector<StationStats> station_stats(const Dataset& d) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_station;
    for (const auto& m : d.records) {
        auto& [ecoli, salinity] = by_station[m.station];
        ecoli.push_back(static_cast<double>(m.ecoli));
        salinity.push_back(m.salinity);
    }
    std::vector<StationStats> out;
    out.reserve(by_station.size());
    for (auto& [code, values] : by_station) {
        StationStats s;
        s.station = code;
        s.n = values.first.size();
        s.ecoli_mean = mean(values.first);
        s.ecoli_median = median(values.first);
        s.salinity_mean = mean(values.second);
        s.salinity_median = median(values.second);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::string> default_features() {
    return {std::string(feature::kSalinity), std::string(feature::kWaterTemp), std::string(feature::kAirTemp),
            std::string(feature::kGhi), std::string(feature::kGhiCum4h)};
}

std::vector<std::string> all_features() {
    auto f = default_features();
    f.emplace_back(feature::kRain4To7);
    f.emplace_back(feature::kRain7To14);
    return f;
}

bool is_feature_name(std::string_view name) noexcept {
    return std::any_of(kFeatureFields.begin(), kFeatureFields.end(),
                       [&](const FeatureField& f) { return f.name == name; });
}

double feature_value(const Measurement& m, std::string_view name) {
    for (const auto& f : kFeatureFields) {
        if (f.name == name) return m.*(f.member);
    }
    throw ConfigError("unknown feature '" + std::string(name) + "'");
}

std::vector<double> extract_features(const Measurement& m, std::span<const std::string> names) {
    std::vector<double> x;
    x.reserve(names.size());
    for (const auto& n : names) x.push_back(feature_value(m, n));
    return x;
}

std::size_t LabeledDataset::count(Label l) const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

LabeledDataset label(const Dataset& d, double limit, std::span<const std::string> features) {
    if (!(limit > 0.0)) throw ConfigError("classification limit must be positive");
    return relabel(d, limit, features);
}

LabeledDataset relabel(const Dataset& d, double limit, std::span<const std::string> features) {
    if (!(limit >= 0.0)) throw ConfigError("labeling threshold must be non-negative");
    if (features.empty()) throw ConfigError("at least one feature is required");
    std::vector<double Measurement::*> members;
    for (const auto& name : features) {
        auto it = std::find_if(kFeatureFields.begin(), kFeatureFields.end(),
                               [&](const FeatureField& f) { return f.name == name; });
        if (it == kFeatureFields.end()) throw ConfigError("unknown feature '" + name + "'");
        members.push_back(it->member);
    }

    LabeledDataset out;
    out.limit = limit;
    out.feature_names.assign(features.begin(), features.end());
    out.features.reserve(d.records.size() * members.size());
    out.labels.reserve(d.records.size());
    for (const auto& m : d.records) {
        for (auto member : members) out.features.push_back(m.*member);
        out.labels.push_back(label_for(m.ecoli, limit));
        out.ecoli.push_back(m.ecoli);
        out.ids.push_back(m.id);
    }
    return out;
}

}  // namespace wqcascade
