#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wqcascade/dataio.hpp"

namespace wqcascade {

/// Per-station marginals. E. coli is log-normal with the given log-scale
/// parameters. Salinity is `salinity_cap` minus a log-normal freshwater dip,
/// which gives the long lower tail seen at stations fed by springs.
struct StationProfile {
    std::string code;
    std::size_t n = 0;
    double ecoli_log_mean = 0.0;
    double ecoli_log_sd = 1.0;
    double dip_log_mean = 0.0;
    double dip_log_sd = 0.5;
    /// First season with records; 0 means the first configured season.
    int first_year = 0;

    /// Fits both log-normals to an arithmetic mean and a median: for a
    /// log-normal, mu = ln(median) and sigma^2 = 2 ln(mean / median). The dip
    /// is fitted to cap - salinity, so salinity needs mean <= median < cap.
    static StationProfile from_moments(std::string code, std::size_t n, double ecoli_mean, double ecoli_median,
                                       double salinity_mean, double salinity_median, double salinity_cap = 38.5);
};

struct MonthDay {
    unsigned month = 1;
    unsigned day = 1;
};

/// Generator settings. Every dependence on E. coli goes through one latent
/// standard normal per record (a Gaussian copula); each correlation is the
/// Spearman target of that single coupling. Salinity also follows the season
/// through the spring offset, so with season_ecoli_corr != 0 it picks up a
/// small extra dependence on E. coli.
struct SynthConfig {
    std::vector<StationProfile> stations;
    /// Salinity vs E. coli within a station.
    double salinity_ecoli_corr = -0.75;
    /// Undisturbed open-sea salinity (PSU).
    double salinity_cap = 38.5;
    /// Local water-temperature anomaly vs E. coli; negative makes polluted
    /// samples colder, as groundwater inflow does.
    double water_temp_ecoli_corr = -0.3;
    /// Day of season vs E. coli; negative puts high counts early (spring).
    double season_ecoli_corr = -0.3;
    /// Clear-sky index vs E. coli; negative pairs high counts with dull days.
    double clearness_ecoli_corr = -0.3;
    /// PSU removed from records inside the spring window. Station salinity
    /// means are preserved on average.
    double spring_salinity_offset = 3.4;
    MonthDay season_start{5, 1};
    MonthDay season_end{9, 30};
    MonthDay spring_end{6, 15};
    int first_year = 2009;
    int n_seasons = 12;
    /// Probability that a rainfall sum is exactly zero.
    double rain_zero_prob = 0.85;
    double rain_mean_mm = 15.0;
    /// Extra flagged outlier records with extreme counts.
    std::size_t n_outliers = 4;
    std::uint64_t seed = 1;

    /// Nine stations calibrated to the monitoring-network summary statistics
    /// (1133 regular records) plus four flagged outliers.
    static SynthConfig calibrated(std::uint64_t seed = 1);

    /// ConfigError when a field is out of range.
    void validate() const;
};

/// Deterministic in `cfg.seed`. Records are ordered by timestamp then
/// station, with ids 1..N in that order.
Dataset generate_dataset(const SynthConfig& cfg);

}  // namespace wqcascade
