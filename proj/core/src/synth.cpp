#include "wqcascade/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "wqcascade/error.hpp"
#include "wqcascade/rng.hpp"

namespace wqcascade {
namespace {

constexpr double kLatitudeDeg = 45.33;
constexpr double kLongitudeDeg = 14.44;

/// Pearson correlation of a Gaussian pair with the given Spearman rho.
double gaussian_corr(double spearman_rho) { return 2.0 * std::sin(std::numbers::pi * spearman_rho / 6.0); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// z = r * latent + sqrt(1 - r^2) * noise.
double correlated(double latent, double r, double noise) { return r * latent + std::sqrt(1.0 - r * r) * noise; }

std::chrono::sys_days to_days(int year, MonthDay md) {
    using namespace std::chrono;
    return sys_days{std::chrono::year{year} / month{md.month} / day{md.day}};
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Clear-sky horizontal irradiance (W/m^2) at a UTC hour on a day of year.
double clear_sky_ghi(int day_of_year, double utc_hour) {
    const double decl = deg2rad(23.44) * std::sin(2.0 * std::numbers::pi * (284.0 + day_of_year) / 365.0);
    const double solar_time = utc_hour + kLongitudeDeg / 15.0;
    const double hour_angle = deg2rad(15.0 * (solar_time - 12.0));
    const double lat = deg2rad(kLatitudeDeg);
    const double sin_el = std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
    if (sin_el <= 0.0) return 0.0;
    return 1098.0 * sin_el * std::exp(-0.057 / sin_el);
}

int day_of_year(std::chrono::sys_days d) {
    using namespace std::chrono;
    const year_month_day ymd{d};
    return static_cast<int>((d - sys_days{ymd.year() / January / 1}).count()) + 1;
}

struct Draws {
    Rng rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> uniform{0.0, 1.0};

    explicit Draws(std::uint64_t seed) : rng(seed) {}
    double z() { return normal(rng); }
    double u() { return uniform(rng); }
};

double rainfall(Draws& d, double zero_prob, double mean_mm) {
    if (d.u() < zero_prob) return 0.0;
    const double mm = -mean_mm * std::log(1.0 - d.u());
    return std::round(mm * 10.0) / 10.0;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

StationProfile StationProfile::from_moments(std::string code, std::size_t n, double ecoli_mean, double ecoli_median,
                                            double salinity_mean, double salinity_median, double salinity_cap) {
    if (!(ecoli_median > 0.0) || !(ecoli_mean >= ecoli_median)) {
        throw ConfigError("station " + code + ": need ecoli mean >= median > 0");
    }
    if (!(salinity_mean <= salinity_median) || !(salinity_median < salinity_cap)) {
        throw ConfigError("station " + code + ": need salinity mean <= median < cap");
    }
    StationProfile p;
    p.code = std::move(code);
    p.n = n;
    p.ecoli_log_mean = std::log(ecoli_median);
    p.ecoli_log_sd = std::sqrt(2.0 * std::log(ecoli_mean / ecoli_median));
    const double dip_median = salinity_cap - salinity_median;
    const double dip_mean = salinity_cap - salinity_mean;
    p.dip_log_mean = std::log(dip_median);
    p.dip_log_sd = std::sqrt(2.0 * std::log(dip_mean / dip_median));
    return p;
}

SynthConfig SynthConfig::calibrated(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.stations = {
        StationProfile::from_moments("BRH", 122, 36.0, 5.0, 35.0, 36.0),
        StationProfile::from_moments("KH", 123, 47.0, 7.0, 34.5, 35.7),
        StationProfile::from_moments("KBW", 144, 36.0, 7.0, 34.7, 35.9),
        StationProfile::from_moments("KBE", 149, 26.0, 5.0, 34.8, 36.0),
        StationProfile::from_moments("KVN", 119, 35.8, 8.0, 34.4, 35.5),
        StationProfile::from_moments("PNI", 20, 56.8, 26.0, 31.8, 34.5),
        StationProfile::from_moments("KW", 151, 78.0, 35.0, 31.6, 33.3),
        StationProfile::from_moments("KE", 155, 86.4, 60.0, 30.0, 32.2),
        StationProfile::from_moments("3M", 150, 72.3, 25.0, 30.5, 32.9),
    };
    cfg.stations[5].first_year = 2019;
    return cfg;
}

void SynthConfig::validate() const {
    if (stations.empty()) throw ConfigError("synth: at least one station is required");
    for (const auto& s : stations) {
        if (s.code.empty()) throw ConfigError("synth: station code is empty");
        if (s.n < 1) throw ConfigError("synth: station " + s.code + " needs n >= 1");
        if (!(s.ecoli_log_sd >= 0.0) || !std::isfinite(s.ecoli_log_mean)) {
            throw ConfigError("synth: station " + s.code + " has invalid ecoli parameters");
        }
        if (!(s.dip_log_sd >= 0.0) || !std::isfinite(s.dip_log_mean)) {
            throw ConfigError("synth: station " + s.code + " has invalid salinity parameters");
        }
        if (s.first_year != 0 && (s.first_year < first_year || s.first_year >= first_year + n_seasons)) {
            throw ConfigError("synth: station " + s.code + " starts outside the configured seasons");
        }
    }
    if (!(salinity_ecoli_corr > -1.0 && salinity_ecoli_corr <= 0.0)) {
        throw ConfigError("synth: salinity_ecoli_corr must lie in (-1, 0]");
    }
    for (double c : {water_temp_ecoli_corr, season_ecoli_corr, clearness_ecoli_corr}) {
        if (!(c > -1.0 && c < 1.0)) throw ConfigError("synth: correlations must lie in (-1, 1)");
    }
    if (!(salinity_cap > 0.0 && salinity_cap <= 45.0)) throw ConfigError("synth: salinity_cap must lie in (0, 45]");
    if (n_seasons < 1) throw ConfigError("synth: n_seasons must be at least 1");
    if (!(rain_zero_prob >= 0.0 && rain_zero_prob <= 1.0)) throw ConfigError("synth: rain_zero_prob must lie in [0, 1]");
    if (!(rain_mean_mm > 0.0)) throw ConfigError("synth: rain_mean_mm must be positive");
    if (!(spring_salinity_offset >= 0.0)) throw ConfigError("synth: spring_salinity_offset must be non-negative");
    const auto start = to_days(2001, season_start);
    const auto spring = to_days(2001, spring_end);
    const auto end = to_days(2001, season_end);
    if (!std::chrono::year_month_day{start}.ok() || !(start <= spring && spring < end)) {
        throw ConfigError("synth: season window must satisfy start <= spring_end < end");
    }
}

Dataset generate_dataset(const SynthConfig& cfg) {
    cfg.validate();
    using namespace std::chrono;

    const double r_sal = gaussian_corr(cfg.salinity_ecoli_corr);
    const double r_season = gaussian_corr(cfg.season_ecoli_corr);
    const double r_clear = gaussian_corr(cfg.clearness_ecoli_corr);
    const double r_water = gaussian_corr(cfg.water_temp_ecoli_corr);

    // Seasons share the calendar window, so the spring share is a constant.
    const double season_days = static_cast<double>((to_days(2001, cfg.season_end) - to_days(2001, cfg.season_start)).count()) + 1.0;
    const double spring_days = static_cast<double>((to_days(2001, cfg.spring_end) - to_days(2001, cfg.season_start)).count()) + 1.0;
    const double spring_share = spring_days / season_days;

    std::vector<Measurement> records;
    for (std::size_t s = 0; s < cfg.stations.size(); ++s) {
        const auto& st = cfg.stations[s];
        Draws d(derive_seed(cfg.seed, s));
        const int year0 = st.first_year != 0 ? st.first_year : cfg.first_year;
        const int n_years = cfg.first_year + cfg.n_seasons - year0;

        for (std::size_t i = 0; i < st.n; ++i) {
            const double latent = d.z();
            Measurement m;
            m.station = st.code;
            m.ecoli = std::llround(std::exp(st.ecoli_log_mean + st.ecoli_log_sd * latent));

            const int year = year0 + static_cast<int>(d.u() * n_years);
            const double season_pos = normal_cdf(correlated(latent, r_season, d.z()));
            const auto day_index = std::min(static_cast<int>(season_pos * season_days), static_cast<int>(season_days) - 1);
            const auto date = to_days(year, cfg.season_start) + days{day_index};
            const bool spring = static_cast<double>(day_index) < spring_days;
            const int minute = 7 * 60 + static_cast<int>(d.u() * 4 * 60);
            m.timestamp = date + minutes{minute};

            // Salinity rises with the copula score, so it inherits r_sal.
            const double dip = std::exp(st.dip_log_mean - st.dip_log_sd * correlated(latent, r_sal, d.z()));
            double salinity = cfg.salinity_cap - dip;
            salinity += cfg.spring_salinity_offset * (spring_share - (spring ? 1.0 : 0.0));
            m.salinity = round_to(std::clamp(salinity, 0.0, 45.0), 0.1);

            const double progress = static_cast<double>(day_index) / season_days;
            const double water = 18.0 + 7.5 * std::sin(std::numbers::pi * 0.9 * progress) +
                                 1.2 * correlated(latent, r_water, d.z());
            m.water_temp = round_to(water, 0.1);
            const double utc_hour = minute / 60.0;
            m.air_temp = round_to(water + 1.5 + 0.4 * (utc_hour - 7.0) + 2.0 * d.z(), 0.1);

            const double clearness = 0.3 + 0.7 * normal_cdf(correlated(latent, r_clear, d.z()));
            const int doy = day_of_year(date);
            m.ghi = std::round(clear_sky_ghi(doy, utc_hour) * clearness);
            double cum = 0.0;
            for (int step = 0; step < 16; ++step) {
                const double h = utc_hour - 4.0 + (step + 0.5) * 0.25;
                cum += clear_sky_ghi(doy, h) * 0.25;
            }
            m.ghi_cum4h = std::round(cum * std::clamp(clearness + 0.05 * d.z(), 0.2, 1.0));

            m.rain_4_7d = rainfall(d, cfg.rain_zero_prob, cfg.rain_mean_mm);
            m.rain_7_14d = rainfall(d, cfg.rain_zero_prob, cfg.rain_mean_mm);
            records.push_back(std::move(m));
        }
    }

    Draws extra(derive_seed(cfg.seed, cfg.stations.size()));
    for (std::size_t i = 0; i < cfg.n_outliers; ++i) {
        const auto& st = cfg.stations[static_cast<std::size_t>(extra.u() * cfg.stations.size()) % cfg.stations.size()];
        Measurement m;
        m.station = st.code;
        m.outlier = true;
        m.ecoli = 2000 + static_cast<std::int64_t>(extra.u() * 8000.0);
        const int year0 = st.first_year != 0 ? st.first_year : cfg.first_year;
        const int year = year0 + static_cast<int>(extra.u() * (cfg.first_year + cfg.n_seasons - year0));
        const auto day_index = static_cast<int>(extra.u() * season_days);
        const auto date = to_days(year, cfg.season_start) + days{std::min(day_index, static_cast<int>(season_days) - 1)};
        m.timestamp = date + hours{8};
        m.salinity = round_to(std::clamp(cfg.salinity_cap - std::exp(st.dip_log_mean + st.dip_log_sd * extra.z()), 0.0, 45.0), 0.1);
        m.water_temp = round_to(22.0 + 2.0 * extra.z(), 0.1);
        m.air_temp = round_to(m.water_temp + 2.0 + 2.0 * extra.z(), 0.1);
        m.ghi = std::round(clear_sky_ghi(day_of_year(date), 8.0) * 0.8);
        m.ghi_cum4h = std::round(m.ghi * 2.0);
        records.push_back(std::move(m));
    }

    std::stable_sort(records.begin(), records.end(), [](const Measurement& a, const Measurement& b) {
        return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.station < b.station;
    });
    for (std::size_t i = 0; i < records.size(); ++i) records[i].id = i + 1;

    Dataset out;
    out.records = std::move(records);
    out.provenance = "synthetic seed=" + std::to_string(cfg.seed);
    return out;
}

}  // namespace wqcascade
