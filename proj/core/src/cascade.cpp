#include "wqcascade/cascade.hpp"

#include <algorithm>
#include <cmath>

#include "json_codec.hpp"
#include "wqcascade/error.hpp"
#include "wqcascade/parallel.hpp"
#include "wqcascade/stats.hpp"

namespace wqcascade {
namespace {

constexpr int kCascadeFormatVersion = 1;
constexpr const char* kCascadeFormat = "wqcascade.cascade";

std::vector<double> sorted_ecoli(const Dataset& d) {
    std::vector<double> v;
    v.reserve(d.size());
    for (const auto& m : d.records) v.push_back(static_cast<double>(m.ecoli));
    std::sort(v.begin(), v.end());
    return v;
}

std::optional<double> effective_weak(const ThresholdPolicy& policy, std::size_t stage, double theta) {
    auto w = policy.weak(stage);
    if (w && !(*w < theta)) return std::nullopt;
    return w;
}

/// Walks the stages, asking `probability_at(k)` for p_k only when the rule
/// reaches stage k.
template <typename ProbabilityAt>
CascadePrediction run_rule(std::span<const StageSpec> stages, const ThresholdPolicy& policy,
                           ProbabilityAt&& probability_at) {
    CascadePrediction out;
    out.probabilities.reserve(stages.size());
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const double p = probability_at(k);
        out.probabilities.push_back(p);
        const auto& stage = stages[k];
        if (policy.passes(p, stage.theta)) {
            out.verdict = Verdict::Excellent;
            out.stage = k + 1;
            out.rule = ExitRule::Strong;
            return out;
        }
        if (k == 0 || !stage.weak) continue;
        const double w_current = *stage.weak;
        double w_previous = w_current;
        if (policy.weak_pairing == WeakPairing::PreviousStage && stages[k - 1].weak) {
            w_previous = *stages[k - 1].weak;
        }
        if (policy.passes(p, w_current) && policy.passes(out.probabilities[k - 1], w_previous)) {
            out.verdict = Verdict::Excellent;
            out.stage = k + 1;
            out.rule = ExitRule::DoubleWeak;
            return out;
        }
    }
    return out;
}

std::string_view to_string(ThresholdMode m) { return m == ThresholdMode::Uniform ? "uniform" : "increasing"; }
std::string_view to_string(WeakPairing w) { return w == WeakPairing::PreviousStage ? "previous" : "current"; }
std::string_view to_string(Comparison c) { return c == Comparison::AtLeast ? "at_least" : "greater"; }

using detail::field;
using detail::Json;

Json policy_to_json(const ThresholdPolicy& p) {
    Json weak = Json::array();
    for (const auto& w : p.weak_thresholds) weak.push_back(w ? Json(*w) : Json(nullptr));
    return Json{{"mode", to_string(p.mode)},
                {"uniform_theta", p.uniform_theta},
                {"increasing_thetas", p.increasing_thetas},
                {"weak_thresholds", std::move(weak)},
                {"feature_masks", p.feature_masks},
                {"weak_pairing", to_string(p.weak_pairing)},
                {"comparison", to_string(p.comparison)}};
}

ThresholdPolicy policy_from_json(const Json& j) {
    ThresholdPolicy p;
    const auto mode = field<std::string>(j, "mode");
    if (mode != "uniform" && mode != "increasing") throw ValidationError("unknown threshold mode '" + mode + "'");
    p.mode = mode == "uniform" ? ThresholdMode::Uniform : ThresholdMode::Increasing;
    p.uniform_theta = field<double>(j, "uniform_theta");
    p.increasing_thetas = field<std::vector<double>>(j, "increasing_thetas");
    p.weak_thresholds.clear();
    for (const auto& w : j.at("weak_thresholds")) {
        p.weak_thresholds.push_back(w.is_null() ? std::nullopt : std::optional<double>(w.get<double>()));
    }
    p.feature_masks = field<std::vector<std::vector<std::string>>>(j, "feature_masks");
    const auto pairing = field<std::string>(j, "weak_pairing");
    if (pairing != "previous" && pairing != "current") throw ValidationError("unknown weak pairing");
    p.weak_pairing = pairing == "previous" ? WeakPairing::PreviousStage : WeakPairing::CurrentStage;
    const auto cmp = field<std::string>(j, "comparison");
    if (cmp != "at_least" && cmp != "greater") throw ValidationError("unknown comparison");
    p.comparison = cmp == "at_least" ? Comparison::AtLeast : Comparison::Greater;
    return p;
}

}  // namespace

StagePlan build_stages(const Dataset& train, std::size_t n_stages, double trim_percentile,
                       std::size_t min_stage_size) {
    if (train.empty()) throw ConfigError("cascade training set is empty");
    if (n_stages < 1) throw ConfigError("a cascade needs at least one stage");
    if (!(trim_percentile > 0.0 && trim_percentile < 100.0)) {
        throw ConfigError("trim percentile must lie strictly between 0 and 100");
    }

    StagePlan plan;
    Dataset current = train;
    double lower_bound = 0.0;
    for (std::size_t k = 0; k < n_stages; ++k) {
        const auto values = sorted_ecoli(current);
        StageData stage;
        stage.lower_bound = lower_bound;
        stage.median = quantile_sorted(values, 0.5);
        stage.p25 = quantile_sorted(values, trim_percentile / 100.0);
        const double cut = stage.p25;
        stage.subset = current;
        plan.stages.push_back(std::move(stage));
        if (k + 1 == n_stages) break;

        Dataset next;
        next.provenance = current.provenance;
        std::copy_if(current.records.begin(), current.records.end(), std::back_inserter(next.records),
                     [cut](const Measurement& m) { return static_cast<double>(m.ecoli) >= cut; });
        if (next.size() < min_stage_size || next.size() == current.size()) {
            plan.stopped_early = true;
            break;
        }
        lower_bound = cut;
        current = std::move(next);
    }
    return plan;
}

ThresholdPolicy ThresholdPolicy::uniform(double theta) {
    ThresholdPolicy p;
    p.mode = ThresholdMode::Uniform;
    p.uniform_theta = theta;
    return p;
}

ThresholdPolicy ThresholdPolicy::all_adjustments(std::size_t n_stages) {
    ThresholdPolicy p;
    p.mode = ThresholdMode::Increasing;
    const std::vector<double> ramp{0.65, 0.70, 0.75};
    p.increasing_thetas.clear();
    for (std::size_t k = 0; k < n_stages; ++k) p.increasing_thetas.push_back(k < ramp.size() ? ramp[k] : 0.80);
    p.weak_thresholds = default_weak_thresholds(n_stages);
    p.feature_masks = default_feature_masks(n_stages, default_features());
    return p;
}

std::vector<std::optional<double>> ThresholdPolicy::default_weak_thresholds(std::size_t n_stages) {
    std::vector<std::optional<double>> w;
    for (std::size_t k = 0; k < n_stages; ++k) {
        if (k == 0) {
            w.emplace_back(std::nullopt);
        } else {
            w.emplace_back(k < 3 ? 0.70 : 0.75);
        }
    }
    return w;
}

std::vector<std::vector<std::string>> ThresholdPolicy::default_feature_masks(std::size_t n_stages,
                                                                            const std::vector<std::string>& base) {
    std::vector<std::string> without_air;
    std::copy_if(base.begin(), base.end(), std::back_inserter(without_air),
                 [](const std::string& f) { return f != feature::kAirTemp; });
    std::vector<std::vector<std::string>> masks;
    for (std::size_t k = 0; k < n_stages; ++k) masks.push_back(k < 3 ? without_air : base);
    return masks;
}

double ThresholdPolicy::theta(std::size_t stage) const {
    if (mode == ThresholdMode::Uniform) return uniform_theta;
    if (stage >= increasing_thetas.size()) throw ConfigError("no threshold for stage " + std::to_string(stage + 1));
    return increasing_thetas[stage];
}

std::optional<double> ThresholdPolicy::weak(std::size_t stage) const {
    if (weak_thresholds.empty()) return std::nullopt;
    if (stage >= weak_thresholds.size()) {
        throw ConfigError("no weak threshold entry for stage " + std::to_string(stage + 1));
    }
    return weak_thresholds[stage];
}

std::vector<std::string> ThresholdPolicy::features(std::size_t stage, const std::vector<std::string>& base) const {
    if (feature_masks.empty()) return base;
    if (stage >= feature_masks.size()) throw ConfigError("no feature mask for stage " + std::to_string(stage + 1));
    return feature_masks[stage];
}

void ThresholdPolicy::validate(std::size_t n_stages, bool allow_longer) const {
    auto covers = [&](std::size_t size) { return allow_longer ? size >= n_stages : size == n_stages; };
    auto check_value = [](double v, const char* what) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string(what) + " must be a non-negative number");
    };
    if (mode == ThresholdMode::Uniform) {
        check_value(uniform_theta, "threshold");
    } else {
        if (!covers(increasing_thetas.size())) {
            throw ConfigError("increasing thresholds list has " + std::to_string(increasing_thetas.size()) +
                              " entries for " + std::to_string(n_stages) + " stages");
        }
        for (double t : increasing_thetas) check_value(t, "threshold");
    }
    if (!weak_thresholds.empty()) {
        if (!covers(weak_thresholds.size())) {
            throw ConfigError("weak thresholds list has " + std::to_string(weak_thresholds.size()) + " entries for " +
                              std::to_string(n_stages) + " stages");
        }
        for (const auto& w : weak_thresholds) {
            if (w) check_value(*w, "weak threshold");
        }
    }
    if (!feature_masks.empty()) {
        if (!covers(feature_masks.size())) {
            throw ConfigError("feature masks list has " + std::to_string(feature_masks.size()) + " entries for " +
                              std::to_string(n_stages) + " stages");
        }
        for (const auto& mask : feature_masks) {
            if (mask.empty()) throw ConfigError("a stage feature mask is empty");
            for (const auto& f : mask) {
                if (!is_feature_name(f)) throw ConfigError("unknown feature '" + f + "' in stage mask");
            }
        }
    }
}

CascadeModel::CascadeModel(std::vector<StageSpec> stages, ForestParams params, ThresholdPolicy policy,
                           std::vector<std::string> base_features)
    : stages_(std::move(stages)),
      params_(params),
      policy_(std::move(policy)),
      base_features_(std::move(base_features)) {
    if (stages_.empty()) throw ValidationError("cascade model has no stages");
    for (std::size_t k = 0; k < stages_.size(); ++k) {
        const auto& s = stages_[k];
        if (!s.forest) throw ValidationError("cascade stage " + std::to_string(k + 1) + " has no forest");
        if (s.features.size() != s.forest->n_features() ||
            !std::equal(s.features.begin(), s.features.end(), s.forest->feature_names().begin())) {
            throw ValidationError("cascade stage " + std::to_string(k + 1) + " features do not match its forest");
        }
    }
}

CascadeModel CascadeModel::with_policy(const ThresholdPolicy& policy) const {
    policy.validate(stages_.size(), true);
    std::vector<StageSpec> stages = stages_;
    for (std::size_t k = 0; k < stages.size(); ++k) {
        if (policy.features(k, base_features_) != stages[k].features) {
            throw ConfigError("policy changes the features of stage " + std::to_string(k + 1) +
                              "; the cascade must be retrained");
        }
        stages[k].theta = policy.theta(k);
        stages[k].weak = effective_weak(policy, k, stages[k].theta);
    }
    return CascadeModel(std::move(stages), params_, policy, base_features_);
}

CascadePrediction CascadeModel::classify(const Measurement& m) const {
    return run_rule(stages_, policy_, [&](std::size_t k) {
        const auto x = extract_features(m, stages_[k].features);
        return stages_[k].forest->predict_proba(x);
    });
}

CascadePrediction CascadeModel::decide(std::span<const double> stage_probabilities) const {
    return run_rule(stages_, policy_, [&](std::size_t k) {
        if (k >= stage_probabilities.size()) throw ConfigError("missing probability for stage " + std::to_string(k + 1));
        return stage_probabilities[k];
    });
}

std::string CascadeModel::to_json() const {
    Json stages = Json::array();
    for (const auto& s : stages_) {
        stages.push_back(Json{{"index", s.index},
                              {"train_size", s.train_size},
                              {"train_lower_bound", s.train_lower_bound},
                              {"median", s.median},
                              {"p25", s.p25},
                              {"theta", s.theta},
                              {"weak", s.weak ? Json(*s.weak) : Json(nullptr)},
                              {"features", s.features},
                              {"forest", detail::forest_to_json(*s.forest)}});
    }
    Json doc{{"format", kCascadeFormat},
             {"version", kCascadeFormatVersion},
             {"params", detail::params_to_json(params_)},
             {"policy", policy_to_json(policy_)},
             {"base_features", base_features_},
             {"stages", std::move(stages)}};
    return doc.dump();
}

CascadeModel CascadeModel::from_json(std::string_view text) {
    const Json j = detail::parse_json(text, "cascade JSON");
    if (field<std::string>(j, "format") != kCascadeFormat) throw ValidationError("not a cascade model document");
    if (field<int>(j, "version") != kCascadeFormatVersion) {
        throw ValidationError("unsupported cascade format version");
    }
    std::vector<StageSpec> stages;
    for (const auto& js : j.at("stages")) {
        StageSpec s;
        s.index = field<std::size_t>(js, "index");
        s.train_size = field<std::size_t>(js, "train_size");
        s.train_lower_bound = field<double>(js, "train_lower_bound");
        s.median = field<double>(js, "median");
        s.p25 = field<double>(js, "p25");
        s.theta = field<double>(js, "theta");
        const auto& w = js.at("weak");
        s.weak = w.is_null() ? std::nullopt : std::optional<double>(w.get<double>());
        s.features = field<std::vector<std::string>>(js, "features");
        s.forest = std::make_shared<const Forest>(detail::forest_from_json(js.at("forest")));
        stages.push_back(std::move(s));
    }
    return CascadeModel(std::move(stages), detail::params_from_json(j.at("params")), policy_from_json(j.at("policy")),
                        field<std::vector<std::string>>(j, "base_features"));
}

CascadeModel fit_cascade(const Dataset& train, const ForestParams& params, const ThresholdPolicy& policy,
                         std::size_t n_stages, const std::vector<std::string>& base_features, unsigned threads,
                         std::size_t min_stage_size) {
    policy.validate(n_stages);
    for (const auto& f : base_features) {
        if (!is_feature_name(f)) throw ConfigError("unknown feature '" + f + "'");
    }
    const auto plan = build_stages(train, n_stages, 25.0, min_stage_size);

    std::vector<StageSpec> stages;
    for (std::size_t k = 0; k < plan.stages.size(); ++k) {
        const auto& data = plan.stages[k];
        StageSpec s;
        s.index = k + 1;
        s.train_size = data.subset.size();
        s.train_lower_bound = data.lower_bound;
        s.median = data.median;
        s.p25 = data.p25;
        s.theta = policy.theta(k);
        s.weak = effective_weak(policy, k, s.theta);
        s.features = policy.features(k, base_features);

        ForestParams stage_params = params;
        stage_params.seed = derive_seed(params.seed, s.index);
        const auto labeled = relabel(data.subset, data.median, s.features);
        s.forest = std::make_shared<const Forest>(fit_forest(labeled, stage_params, threads));
        stages.push_back(std::move(s));
    }
    return CascadeModel(std::move(stages), params, policy, base_features);
}

CascadePrediction classify_measurement(const CascadeModel& model, const Measurement& m) { return model.classify(m); }

std::vector<CascadePrediction> classify_dataset(const CascadeModel& model, const Dataset& d, unsigned threads) {
    std::vector<CascadePrediction> out(d.size());
    parallel_for(d.size(), threads, [&](std::size_t i) { out[i] = model.classify(d.records[i]); });
    return out;
}

std::vector<std::vector<double>> stage_probabilities(const CascadeModel& model, const Dataset& d, unsigned threads) {
    std::vector<std::vector<double>> out(d.size());
    const auto stages = model.stages();
    parallel_for(d.size(), threads, [&](std::size_t i) {
        auto& row = out[i];
        row.reserve(stages.size());
        for (const auto& s : stages) {
            row.push_back(s.forest->predict_proba(extract_features(d.records[i], s.features)));
        }
    });
    return out;
}

CascadeReport score_cascade(std::span<const CascadePrediction> predictions, const Dataset& test, std::size_t n_stages,
                            double limit) {
    if (predictions.size() != test.size()) throw ConfigError("prediction count does not match test set size");
    CascadeReport r;
    r.limit = limit;
    r.n_test = test.size();
    r.stage_exits.assign(n_stages, 0);
    r.double_weak_exits.assign(n_stages, 0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool above = label_for(test.records[i].ecoli, limit) == Label::Above;
        if (above) ++r.n_above_limit;
        const auto& p = predictions[i];
        if (!p.excellent()) {
            ++r.suspects;
            continue;
        }
        (above ? r.false_negative : r.true_positive) += 1;
        if (p.stage == 0 || p.stage > n_stages) throw ConfigError("prediction exit stage out of range");
        ++r.stage_exits[p.stage - 1];
        if (p.rule == ExitRule::DoubleWeak) ++r.double_weak_exits[p.stage - 1];
    }
    const std::size_t n_below = r.n_test - r.n_above_limit;
    if (n_below > 0) r.true_positive_rate = static_cast<double>(r.true_positive) / n_below;
    if (r.n_above_limit > 0) r.false_negative_rate = static_cast<double>(r.false_negative) / r.n_above_limit;
    return r;
}

CascadeReport evaluate_cascade(const CascadeModel& model, const Dataset& test, double limit, unsigned threads) {
    if (test.empty()) throw ConfigError("cascade evaluation needs a non-empty test set");
    const auto predictions = classify_dataset(model, test, threads);
    return score_cascade(predictions, test, model.stages().size(), limit);
}

std::string_view to_string(ExitRule rule) {
    switch (rule) {
        case ExitRule::None:
            return "none";
        case ExitRule::Strong:
            return "strong";
        case ExitRule::DoubleWeak:
            return "double_weak";
    }
    return "none";
}

}  // namespace wqcascade
