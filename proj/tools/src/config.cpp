#include "config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <wqcascade/error.hpp>

namespace wqcascade::cli {
namespace {

const std::vector<std::string> kKeys = {
    "data.path",
    "data.synthetic",
    "data.drop_outliers",
    "data.thin",
    "synth.seed",
    "synth.n_outliers",
    "synth.salinity_ecoli_corr",
    "synth.water_temp_ecoli_corr",
    "synth.season_ecoli_corr",
    "synth.clearness_ecoli_corr",
    "synth.spring_salinity_offset",
    "synth.rain_zero_prob",
    "synth.rain_mean_mm",
    "synth.first_year",
    "synth.n_seasons",
    "split.spec",
    "split.group",
    "split.stations",
    "model.kind",
    "model.path",
    "model.estimators",
    "model.max_depth",
    "model.min_samples_split",
    "model.max_features",
    "model.stages",
    "model.min_stage_size",
    "policy.mode",
    "policy.theta",
    "policy.thetas",
    "policy.weak",
    "policy.feature_masks",
    "policy.weak_pairing",
    "policy.comparison",
    "run.limit",
    "run.limits",
    "run.n_runs",
    "run.seed",
    "run.out",
    "run.formats",
    "run.threads",
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        auto item = trim(s.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": '" + text + "' is not a valid number");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError(key + ": '" + text + "' is not a boolean");
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<double>(key, item));
    return out;
}

std::string num(double v) { return format_number(v); }

class Reader {
public:
    explicit Reader(const Settings& s) : s_(s) {}

    const std::string* get(const std::string& key) const {
        const auto it = s_.find(key);
        return it == s_.end() ? nullptr : &it->second;
    }
    bool has(const std::string& key) const { return s_.contains(key); }

    template <typename T>
    void number(const std::string& key, T& target) const {
        if (const auto* v = get(key)) target = parse_number<T>(key, *v);
    }
    void boolean(const std::string& key, bool& target) const {
        if (const auto* v = get(key)) target = parse_bool(key, *v);
    }

private:
    const Settings& s_;
};

std::vector<std::optional<double>> parse_weak(const std::string& text) {
    std::vector<std::optional<double>> out;
    for (const auto& item : split_list(text)) {
        if (item == "none" || item == "-") {
            out.emplace_back();
        } else {
            out.emplace_back(parse_number<double>("policy.weak", item));
        }
    }
    return out;
}

std::string weak_to_string(const std::vector<std::optional<double>>& weak) {
    if (weak.empty()) return "off";
    std::vector<std::string> items;
    for (const auto& w : weak) items.push_back(w ? num(*w) : "none");
    return join(items);
}

std::string masks_to_string(const std::vector<std::vector<std::string>>& masks) {
    if (masks.empty()) return "off";
    std::vector<std::string> stages;
    for (const auto& m : masks) stages.push_back(join(m, "+"));
    return join(stages);
}

/// "off", "default", or per-stage lists "a+b+c,a+b,...".
std::vector<std::vector<std::string>> parse_masks(const std::string& text, std::size_t stages) {
    if (text == "off") return {};
    if (text == "default") return ThresholdPolicy::default_feature_masks(stages, default_features());
    std::vector<std::vector<std::string>> out;
    for (const auto& stage : split_list(text)) {
        std::vector<std::string> mask;
        std::size_t start = 0;
        while (true) {
            const auto plus = stage.find('+', start);
            auto name = trim(std::string_view(stage).substr(start, plus == std::string::npos ? std::string::npos : plus - start));
            if (!is_feature_name(name)) throw ConfigError("policy.feature_masks: unknown feature '" + name + "'");
            mask.push_back(std::move(name));
            if (plus == std::string::npos) break;
            start = plus + 1;
        }
        out.push_back(std::move(mask));
    }
    return out;
}

/// Resizes a per-stage list by repeating its last entry or truncating.
template <typename T>
void fit_length(std::vector<T>& v, std::size_t n) {
    if (v.empty()) return;
    if (v.size() > n) v.resize(n);
    while (v.size() < n) v.push_back(v.back());
}

std::string sha256_hex(std::string_view text) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string canonical(const RunConfig& cfg, bool for_hash) {
    std::ostringstream out;
    out << "[data]\n";
    if (cfg.data) out << "path = " << cfg.data->generic_string() << '\n';
    out << "synthetic = " << (cfg.use_synth ? "true" : "false") << '\n'
        << "drop_outliers = " << (cfg.drop_outliers ? "true" : "false") << '\n';
    if (cfg.thin) out << "thin = " << *cfg.thin << '\n';

    if (cfg.use_synth) {
        const auto& s = cfg.synth;
        out << "\n[synth]\n"
            << "seed = " << s.seed << '\n'
            << "n_outliers = " << s.n_outliers << '\n'
            << "salinity_ecoli_corr = " << num(s.salinity_ecoli_corr) << '\n'
            << "water_temp_ecoli_corr = " << num(s.water_temp_ecoli_corr) << '\n'
            << "season_ecoli_corr = " << num(s.season_ecoli_corr) << '\n'
            << "clearness_ecoli_corr = " << num(s.clearness_ecoli_corr) << '\n'
            << "spring_salinity_offset = " << num(s.spring_salinity_offset) << '\n'
            << "rain_zero_prob = " << num(s.rain_zero_prob) << '\n'
            << "rain_mean_mm = " << num(s.rain_mean_mm) << '\n'
            << "first_year = " << s.first_year << '\n'
            << "n_seasons = " << s.n_seasons << '\n';
    }

    out << "\n[split]\n"
        << "spec = " << (cfg.split ? cfg.split->to_string() : "none") << '\n'
        << "group = " << to_string(cfg.group.name) << '\n';
    if (!cfg.group.stations.empty()) {
        out << "stations = " << join(std::vector<std::string>(cfg.group.stations.begin(), cfg.group.stations.end()))
            << '\n';
    }

    out << "\n[model]\n"
        << "kind = " << (cfg.kind == ModelKind::Single ? "single" : "cascade") << '\n';
    if (cfg.model) out << "path = " << cfg.model->generic_string() << '\n';
    out << "estimators = " << cfg.forest.n_estimators << '\n'
        << "max_depth = " << cfg.forest.max_depth << '\n'
        << "min_samples_split = " << cfg.forest.min_samples_split << '\n'
        << "max_features = " << cfg.forest.max_features << '\n'
        << "stages = " << cfg.stages << '\n'
        << "min_stage_size = " << cfg.min_stage_size << '\n';

    const auto& p = cfg.policy;
    std::vector<std::string> thetas;
    for (double t : p.increasing_thetas) thetas.push_back(num(t));
    out << "\n[policy]\n"
        << "mode = " << (p.mode == ThresholdMode::Uniform ? "uniform" : "increasing") << '\n'
        << "theta = " << num(p.uniform_theta) << '\n'
        << "thetas = " << join(thetas) << '\n'
        << "weak = " << weak_to_string(p.weak_thresholds) << '\n'
        << "feature_masks = " << masks_to_string(p.feature_masks) << '\n'
        << "weak_pairing = " << (p.weak_pairing == WeakPairing::PreviousStage ? "previous" : "current") << '\n'
        << "comparison = " << (p.comparison == Comparison::AtLeast ? "at_least" : "greater") << '\n';

    std::vector<std::string> limits;
    for (double l : cfg.limits) limits.push_back(num(l));
    std::vector<std::string> formats;
    for (auto f : cfg.formats) formats.emplace_back(to_string(f));
    out << "\n[run]\n"
        << "limit = " << num(cfg.limit) << '\n'
        << "limits = " << (limits.empty() ? "auto" : join(limits)) << '\n'
        << "n_runs = " << cfg.n_runs << '\n'
        << "seed = " << cfg.seed << '\n';
    if (!for_hash) {
        out << "out = " << cfg.out.generic_string() << '\n' << "threads = " << cfg.threads << '\n';
    }
    out << "formats = " << join(formats) << '\n';
    return out.str();
}

}  // namespace

std::vector<std::string> known_keys() { return kKeys; }

Settings read_settings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    Settings out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' is outside any section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            if (std::find(kKeys.begin(), kKeys.end(), full) == kKeys.end()) {
                throw ConfigError(path.string() + ": unknown key '" + full + "'");
            }
            out[full] = unquote(value.get_value<std::string>());
        }
    }
    return out;
}

RunConfig resolve(const Settings& settings) {
    for (const auto& [key, value] : settings) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) throw ConfigError("unknown key '" + key + "'");
    }
    const Reader r(settings);
    RunConfig cfg;

    if (const auto* v = r.get("data.path"); v && !v->empty()) cfg.data = *v;
    r.boolean("data.synthetic", cfg.use_synth);
    r.boolean("data.drop_outliers", cfg.drop_outliers);
    if (r.has("data.thin")) {
        std::size_t t = 0;
        r.number("data.thin", t);
        cfg.thin = t;
    }
    const bool synth_keys = std::any_of(settings.begin(), settings.end(),
                                        [](const auto& kv) { return kv.first.starts_with("synth."); });
    if (synth_keys) cfg.use_synth = true;
    if (cfg.data && cfg.use_synth) throw ConfigError("give either a dataset path or synthetic data settings, not both");

    auto& s = cfg.synth;
    r.number("synth.seed", s.seed);
    r.number("synth.n_outliers", s.n_outliers);
    r.number("synth.salinity_ecoli_corr", s.salinity_ecoli_corr);
    r.number("synth.water_temp_ecoli_corr", s.water_temp_ecoli_corr);
    r.number("synth.season_ecoli_corr", s.season_ecoli_corr);
    r.number("synth.clearness_ecoli_corr", s.clearness_ecoli_corr);
    r.number("synth.spring_salinity_offset", s.spring_salinity_offset);
    r.number("synth.rain_zero_prob", s.rain_zero_prob);
    r.number("synth.rain_mean_mm", s.rain_mean_mm);
    r.number("synth.first_year", s.first_year);
    r.number("synth.n_seasons", s.n_seasons);
    s.validate();

    if (const auto* v = r.get("split.spec")) {
        cfg.split = *v == "none" ? std::nullopt : std::optional(SplitSpec::parse(*v));
    }
    if (const auto* v = r.get("split.group")) cfg.group = StationGroup::defaults(StationGroup::parse_name(*v));
    if (const auto* v = r.get("split.stations")) {
        const auto codes = split_list(*v);
        cfg.group.stations = {codes.begin(), codes.end()};
    }

    if (const auto* v = r.get("model.kind")) {
        if (*v == "single") {
            cfg.kind = ModelKind::Single;
        } else if (*v == "cascade") {
            cfg.kind = ModelKind::Cascade;
        } else {
            throw ConfigError("model.kind: expected single or cascade, got '" + *v + "'");
        }
    }
    if (const auto* v = r.get("model.path"); v && !v->empty()) cfg.model = *v;
    cfg.forest.n_estimators = cfg.kind == ModelKind::Single ? 100 : 800;
    r.number("model.estimators", cfg.forest.n_estimators);
    r.number("model.max_depth", cfg.forest.max_depth);
    r.number("model.min_samples_split", cfg.forest.min_samples_split);
    r.number("model.max_features", cfg.forest.max_features);
    r.number("model.stages", cfg.stages);
    r.number("model.min_stage_size", cfg.min_stage_size);
    if (cfg.stages < 1) throw ConfigError("model.stages must be at least 1");

    cfg.policy_explicit = std::any_of(settings.begin(), settings.end(),
                                      [](const auto& kv) { return kv.first.starts_with("policy."); });
    auto& p = cfg.policy;
    if (const auto* v = r.get("policy.mode")) {
        if (*v == "uniform") {
            p = ThresholdPolicy::uniform(p.uniform_theta);
        } else if (*v == "increasing") {
            p.mode = ThresholdMode::Increasing;
        } else if (*v == "all") {
            p = ThresholdPolicy::all_adjustments(cfg.stages);
        } else {
            throw ConfigError("policy.mode: expected uniform, increasing or all, got '" + *v + "'");
        }
    }
    fit_length(p.increasing_thetas, cfg.stages);
    r.number("policy.theta", p.uniform_theta);
    if (const auto* v = r.get("policy.thetas")) p.increasing_thetas = parse_doubles("policy.thetas", *v);
    if (const auto* v = r.get("policy.weak")) {
        if (*v == "off") {
            p.weak_thresholds.clear();
        } else if (*v == "default") {
            p.weak_thresholds = ThresholdPolicy::default_weak_thresholds(cfg.stages);
        } else {
            p.weak_thresholds = parse_weak(*v);
        }
    }
    if (const auto* v = r.get("policy.feature_masks")) p.feature_masks = parse_masks(*v, cfg.stages);
    if (const auto* v = r.get("policy.weak_pairing")) {
        if (*v == "previous") {
            p.weak_pairing = WeakPairing::PreviousStage;
        } else if (*v == "current") {
            p.weak_pairing = WeakPairing::CurrentStage;
        } else {
            throw ConfigError("policy.weak_pairing: expected previous or current");
        }
    }
    if (const auto* v = r.get("policy.comparison")) {
        if (*v == "at_least") {
            p.comparison = Comparison::AtLeast;
        } else if (*v == "greater") {
            p.comparison = Comparison::Greater;
        } else {
            throw ConfigError("policy.comparison: expected at_least or greater");
        }
    }
    p.validate(cfg.stages);

    r.number("run.limit", cfg.limit);
    if (!(cfg.limit > 0.0)) throw ConfigError("run.limit must be positive");
    if (const auto* v = r.get("run.limits"); v && *v != "auto") cfg.limits = parse_doubles("run.limits", *v);
    cfg.n_runs = cfg.kind == ModelKind::Single ? 20 : 50;
    r.number("run.n_runs", cfg.n_runs);
    if (cfg.n_runs < 1) throw ConfigError("run.n_runs must be at least 1");
    r.number("run.seed", cfg.seed);
    if (const auto* v = r.get("run.out")) cfg.out = *v;
    if (const auto* v = r.get("run.formats")) {
        cfg.formats.clear();
        for (const auto& f : split_list(*v)) cfg.formats.push_back(parse_report_format(f));
        if (cfg.formats.empty()) throw ConfigError("run.formats is empty");
    }
    r.number("run.threads", cfg.threads);
    return cfg;
}

std::string to_ini(const RunConfig& cfg) { return canonical(cfg, false); }

std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical(cfg, true)); }

}  // namespace wqcascade::cli
