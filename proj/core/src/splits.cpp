#include "wqcascade/splits.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "wqcascade/error.hpp"

namespace wqcascade {
namespace {

Split checked(Split s, std::string_view what) {
    if (s.test.empty()) throw ConfigError(std::string(what) + ": test set is empty");
    if (s.train.empty()) throw ConfigError(std::string(what) + ": training set is empty");
    return s;
}

Split partition(const Dataset& d, auto&& to_test) {
    Split s;
    s.train.provenance = d.provenance;
    s.test.provenance = d.provenance;
    for (const auto& m : d.records) (to_test(m) ? s.test : s.train).records.push_back(m);
    return s;
}

std::map<std::string, std::string, std::less<>> parse_params(std::string_view text) {
    std::map<std::string, std::string, std::less<>> out;
    while (!text.empty()) {
        auto comma = text.find(',');
        auto item = text.substr(0, comma);
        auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw ConfigError("split parameter '" + std::string(item) + "' is not key=value");
        }
        out[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    }
    return out;
}

template <typename T>
T to_number(const std::string& s, std::string_view key) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("split parameter '" + std::string(key) + "' must be an integer");
    }
    return v;
}

}  // namespace

SplitSpec SplitSpec::uniform(std::size_t k, std::size_t offset) {
    if (k < 2) throw ConfigError("uniform split stride k must be at least 2");
    if (offset >= k) throw ConfigError("uniform split offset must be smaller than k");
    SplitSpec s;
    s.kind = SplitKind::Uniform;
    s.k = k;
    s.offset = offset;
    return s;
}

SplitSpec SplitSpec::temporal(int year) {
    SplitSpec s;
    s.kind = SplitKind::Temporal;
    s.k = 0;
    s.year = year;
    return s;
}

SplitSpec SplitSpec::spatial(std::string station) {
    if (station.empty()) throw ConfigError("spatial split needs a station code");
    SplitSpec s;
    s.kind = SplitKind::Spatial;
    s.k = 0;
    s.station = std::move(station);
    return s;
}

SplitSpec SplitSpec::parse(std::string_view text) {
    auto colon = text.find(':');
    auto kind = text.substr(0, colon);
    auto params = parse_params(colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1));
    auto allow_only = [&](std::initializer_list<std::string_view> keys) {
        for (const auto& [key, value] : params) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw ConfigError("split '" + std::string(kind) + "' does not take parameter '" + key + "'");
            }
        }
    };
    if (kind == "uniform") {
        allow_only({"k", "offset"});
        std::size_t k = params.contains("k") ? to_number<std::size_t>(params["k"], "k") : 5;
        std::size_t offset = params.contains("offset") ? to_number<std::size_t>(params["offset"], "offset") : 0;
        return uniform(k, offset);
    }
    if (kind == "temporal") {
        allow_only({"year"});
        if (!params.contains("year")) throw ConfigError("temporal split needs year=YYYY");
        return temporal(to_number<int>(params["year"], "year"));
    }
    if (kind == "spatial") {
        allow_only({"station"});
        if (!params.contains("station")) throw ConfigError("spatial split needs station=CODE");
        return spatial(params["station"]);
    }
    throw ConfigError("unknown split kind '" + std::string(kind) + "'");
}

std::string SplitSpec::to_string() const {
    switch (kind) {
        case SplitKind::Uniform:
            return "uniform:k=" + std::to_string(k) + ",offset=" + std::to_string(offset);
        case SplitKind::Temporal:
            return "temporal:year=" + std::to_string(year);
        case SplitKind::Spatial:
            return "spatial:station=" + station;
    }
    return {};
}

std::vector<Measurement> sorted_by_ecoli(const Dataset& d) {
    std::vector<Measurement> sorted = d.records;
    std::sort(sorted.begin(), sorted.end(), [](const Measurement& a, const Measurement& b) {
        return a.ecoli != b.ecoli ? a.ecoli < b.ecoli : a.id < b.id;
    });
    return sorted;
}

Split uniform_split(const Dataset& d, std::size_t k, std::size_t offset) {
    if (k < 2) throw ConfigError("uniform split stride k must be at least 2");
    if (offset >= k) throw ConfigError("uniform split offset must be smaller than k");
    if (d.empty()) throw ConfigError("uniform split of an empty dataset");
    Split s;
    s.train.provenance = d.provenance;
    s.test.provenance = d.provenance;
    auto sorted = sorted_by_ecoli(d);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        (i % k == offset ? s.test : s.train).records.push_back(std::move(sorted[i]));
    }
    return s;
}

Split temporal_split(const Dataset& d, int year) {
    auto s = partition(d, [year](const Measurement& m) { return year_of(m.timestamp) == year; });
    if (s.test.empty()) throw ConfigError("temporal split: no records in year " + std::to_string(year));
    return checked(std::move(s), "temporal split on " + std::to_string(year));
}

Split spatial_split(const Dataset& d, std::string_view station) {
    auto s = partition(d, [station](const Measurement& m) { return m.station == station; });
    if (s.test.empty()) throw ConfigError("spatial split: station '" + std::string(station) + "' not present");
    return checked(std::move(s), "spatial split on " + std::string(station));
}

Split apply_split(const Dataset& d, const SplitSpec& spec) {
    switch (spec.kind) {
        case SplitKind::Uniform:
            return uniform_split(d, spec.k, spec.offset);
        case SplitKind::Temporal:
            return temporal_split(d, spec.year);
        case SplitKind::Spatial:
            return spatial_split(d, spec.station);
    }
    throw ConfigError("unknown split kind");
}

Dataset thin(const Dataset& d, std::size_t target_size) {
    const std::size_t n = d.size();
    if (target_size == 0) throw ConfigError("thin: target size must be positive");
    if (target_size > n) {
        throw ConfigError("thin: target size " + std::to_string(target_size) + " exceeds dataset size " +
                          std::to_string(n));
    }
    if (target_size == n) return d;

    const std::size_t removals = n - target_size;
    const auto stride = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) / static_cast<double>(removals)));
    const std::size_t stride_size = n - n / stride;
    const bool use_stride = stride_size + 1 >= target_size && stride_size <= target_size + 1;

    Dataset out;
    out.provenance = d.provenance;
    auto sorted = sorted_by_ecoli(d);
    for (std::size_t i = 0; i < n; ++i) {
        const bool removed = use_stride ? (i + 1) % stride == 0 : (i + 1) * removals / n > i * removals / n;
        if (!removed) out.records.push_back(std::move(sorted[i]));
    }
    return out;
}

StationGroup StationGroup::defaults(GroupName name) {
    StationGroup g;
    g.name = name;
    switch (name) {
        case GroupName::Low:
            g.stations = {"BRH", "KH", "KBW", "KBE", "KVN"};
            break;
        case GroupName::High:
            g.stations = {"PNI", "KW", "KE", "3M"};
            break;
        case GroupName::All:
            break;
    }
    return g;
}

GroupName StationGroup::parse_name(std::string_view text) {
    if (text == "low" || text == "LOW") return GroupName::Low;
    if (text == "high" || text == "HIGH") return GroupName::High;
    if (text == "all" || text == "ALL") return GroupName::All;
    throw ConfigError("unknown station group '" + std::string(text) + "' (expected low, high or all)");
}

bool StationGroup::contains(std::string_view station) const {
    if (name == GroupName::All && stations.empty()) return true;
    return stations.find(std::string(station)) != stations.end();
}

std::string_view to_string(GroupName name) {
    switch (name) {
        case GroupName::Low:
            return "low";
        case GroupName::High:
            return "high";
        case GroupName::All:
            return "all";
    }
    return "all";
}

Dataset select_group(const Dataset& d, const StationGroup& group) {
    Dataset out;
    out.provenance = d.provenance;
    std::copy_if(d.records.begin(), d.records.end(), std::back_inserter(out.records),
                 [&](const Measurement& m) { return group.contains(m.station); });
    return out;
}

}  // namespace wqcascade
