#pragma once

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <wqcascade/dataio.hpp>

namespace fixtures {

inline wqcascade::Measurement measurement(std::uint64_t id, std::int64_t ecoli, std::string station = "KE") {
    wqcascade::Measurement m;
    m.id = id;
    m.station = std::move(station);
    m.timestamp = wqcascade::parse_timestamp("2015-07-01T08:00:00Z") + std::chrono::hours(24 * (id % 90));
    m.salinity = 30.0 + static_cast<double>(id % 7);
    m.water_temp = 20.0 + static_cast<double>(id % 5);
    m.air_temp = 22.0 + static_cast<double>(id % 3);
    m.ghi = 400.0 + static_cast<double>(id % 11);
    m.ghi_cum4h = 1000.0 + static_cast<double>(id % 13);
    m.ecoli = ecoli;
    return m;
}

/// One record per value, ids 1..N in order.
inline wqcascade::Dataset from_ecoli(const std::vector<std::int64_t>& values, std::string station = "KE") {
    wqcascade::Dataset d;
    for (std::size_t i = 0; i < values.size(); ++i) d.records.push_back(measurement(i + 1, values[i], station));
    return d;
}

/// Distinct, widely spread counts in shuffled order.
inline wqcascade::Dataset tie_sparse(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> dist(6.0, 1.5);
    std::vector<std::int64_t> values;
    while (values.size() < n) {
        const auto v = static_cast<std::int64_t>(dist(rng) * 100.0);
        if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
    }
    return from_ecoli(values);
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("wqcascade-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures
