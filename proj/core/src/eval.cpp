#include "wqcascade/eval.hpp"

#include <algorithm>
#include <map>

#include "wqcascade/error.hpp"
#include "wqcascade/rng.hpp"
#include "wqcascade/stats.hpp"

namespace wqcascade {
namespace {

std::optional<MeanStd> optional_mean_std(const std::vector<std::optional<double>>& values) {
    std::vector<double> present;
    for (const auto& v : values) {
        if (v) present.push_back(*v);
    }
    if (present.empty()) return std::nullopt;
    return mean_std(present);
}

void require_split(const Split& split) {
    if (split.train.empty()) throw ConfigError("experiment: training set is empty");
    if (split.test.empty()) throw ConfigError("experiment: test set is empty");
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw ConfigError("mean_std: no values");
    return {mean(values), values.size() > 1 ? sample_stddev(values) : 0.0};
}

RunMetrics score_forest(const Forest& forest, const LabeledDataset& test) {
    RunMetrics m;
    m.n_test = test.rows();
    std::size_t correct = 0;
    std::size_t above_hit = 0;
    for (std::size_t r = 0; r < test.rows(); ++r) {
        const Label truth = test.labels[r];
        const Label pred = forest.predict_class(test.row(r));
        if (truth == Label::Above) {
            ++m.n_above;
            if (pred == Label::Above) ++above_hit;
        }
        if (pred == truth) ++correct;
    }
    if (m.n_test > 0) m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n_test);
    if (m.n_above > 0) m.tp_rate = static_cast<double>(above_hit) / static_cast<double>(m.n_above);
    m.importance = forest.feature_importance();
    return m;
}

SingleModelReport average_runs(std::span<const RunMetrics> runs, double limit, std::vector<std::string> feature_names) {
    if (runs.empty()) throw ValidationError("average_runs: no runs");
    const RunMetrics& first = runs.front();
    for (const auto& r : runs) {
        if (r.n_test != first.n_test || r.n_above != first.n_above || r.tp_rate.has_value() != first.tp_rate.has_value() ||
            r.importance.size() != first.importance.size()) {
            throw ValidationError("average_runs: runs have mixed shapes");
        }
    }
    if (!feature_names.empty() && feature_names.size() != first.importance.size()) {
        throw ValidationError("average_runs: feature names do not match importance length");
    }

    SingleModelReport rep;
    rep.limit = limit;
    rep.n_test = first.n_test;
    rep.n_above = first.n_above;
    rep.n_runs = runs.size();
    rep.feature_names = std::move(feature_names);

    std::vector<double> acc;
    std::vector<std::optional<double>> tp;
    for (const auto& r : runs) {
        acc.push_back(r.accuracy);
        tp.push_back(r.tp_rate);
    }
    rep.accuracy = mean_std(acc);
    rep.tp_rate = optional_mean_std(tp);

    for (std::size_t f = 0; f < first.importance.size(); ++f) {
        std::vector<double> col;
        for (const auto& r : runs) col.push_back(r.importance[f]);
        rep.importance.push_back(mean_std(col));
    }
    return rep;
}

SingleModelReport single_model_experiment(const Split& split, double limit, const ForestParams& params,
                                          const ExperimentOptions& options) {
    require_split(split);
    if (options.n_runs < 1) throw ConfigError("experiment: n_runs must be at least 1");
    const LabeledDataset train = label(split.train, limit, options.features);
    const LabeledDataset test = label(split.test, limit, options.features);

    std::vector<RunMetrics> runs;
    runs.reserve(options.n_runs);
    for (std::size_t i = 0; i < options.n_runs; ++i) {
        ForestParams p = params;
        p.seed = derive_seed(options.base_seed, i);
        runs.push_back(score_forest(fit_forest(train, p, options.threads), test));
    }
    return average_runs(runs, limit, options.features);
}

double majority_accuracy(const LabeledDataset& train, const LabeledDataset& test) {
    if (test.rows() == 0) throw ConfigError("majority_accuracy: test set is empty");
    const Label majority = train.count(Label::Above) > train.count(Label::Below) ? Label::Above : Label::Below;
    return static_cast<double>(test.count(majority)) / static_cast<double>(test.rows());
}

SweepCurve limit_sweep(const Split& split, std::span<const double> limits, const ForestParams& params,
                       const ExperimentOptions& options) {
    if (limits.empty()) throw ConfigError("limit_sweep: no limits");
    if (std::adjacent_find(limits.begin(), limits.end(), std::greater_equal<>{}) != limits.end()) {
        throw ConfigError("limit_sweep: limits must be strictly increasing");
    }
    SweepCurve curve;
    for (double limit : limits) {
        const auto rep = single_model_experiment(split, limit, params, options);
        curve.points.push_back({limit, rep.n_above, rep.accuracy, rep.tp_rate});
    }
    return curve;
}

CascadeSummary average_cascade_runs(std::span<const CascadeReport> runs, std::string label) {
    if (runs.empty()) throw ValidationError("average_cascade_runs: no runs");
    const CascadeReport& first = runs.front();
    std::size_t n_stages = 0;
    for (const auto& r : runs) {
        if (r.n_test != first.n_test || r.n_above_limit != first.n_above_limit || r.limit != first.limit) {
            throw ValidationError("average_cascade_runs: runs have mixed shapes");
        }
        n_stages = std::max(n_stages, r.stage_exits.size());
    }

    CascadeSummary s;
    s.label = std::move(label);
    s.limit = first.limit;
    s.n_runs = runs.size();
    s.n_test = first.n_test;
    s.n_above_limit = first.n_above_limit;

    std::vector<double> tp, fn, sus;
    std::vector<std::optional<double>> tp_rate, fn_rate;
    s.stage_exits.assign(n_stages, 0.0);
    for (const auto& r : runs) {
        tp.push_back(static_cast<double>(r.true_positive));
        fn.push_back(static_cast<double>(r.false_negative));
        sus.push_back(static_cast<double>(r.suspects));
        tp_rate.push_back(r.true_positive_rate);
        fn_rate.push_back(r.false_negative_rate);
        for (std::size_t k = 0; k < r.stage_exits.size(); ++k) s.stage_exits[k] += static_cast<double>(r.stage_exits[k]);
    }
    for (double& e : s.stage_exits) e /= static_cast<double>(runs.size());
    s.true_positive = mean_std(tp);
    s.false_negative = mean_std(fn);
    s.suspects = mean_std(sus);
    s.true_positive_rate = optional_mean_std(tp_rate);
    s.false_negative_rate = optional_mean_std(fn_rate);
    s.runs.assign(runs.begin(), runs.end());
    return s;
}

std::vector<CascadeSummary> cascade_experiment(const Split& split, const ForestParams& params,
                                               std::span<const NamedPolicy> policies,
                                               const CascadeExperimentOptions& options) {
    require_split(split);
    if (policies.empty()) throw ConfigError("cascade_experiment: no policies");
    if (options.n_runs < 1) throw ConfigError("cascade_experiment: n_runs must be at least 1");

    // Policies that train identical forests share one model per run.
    using FeaturePlan = std::vector<std::vector<std::string>>;
    std::map<FeaturePlan, std::vector<std::size_t>> groups;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        policies[p].policy.validate(options.n_stages);
        FeaturePlan plan;
        for (std::size_t k = 0; k < options.n_stages; ++k) {
            plan.push_back(policies[p].policy.features(k, options.base_features));
        }
        groups[plan].push_back(p);
    }

    std::vector<std::vector<CascadeReport>> reports(policies.size());
    for (std::size_t i = 0; i < options.n_runs; ++i) {
        ForestParams p = params;
        p.seed = derive_seed(options.base_seed, i);
        for (const auto& [plan, members] : groups) {
            const CascadeModel model = fit_cascade(split.train, p, policies[members.front()].policy, options.n_stages,
                                                   options.base_features, options.threads, options.min_stage_size);
            const auto probs = stage_probabilities(model, split.test, options.threads);
            for (std::size_t idx : members) {
                const CascadeModel variant = model.with_policy(policies[idx].policy);
                std::vector<CascadePrediction> preds;
                preds.reserve(probs.size());
                for (const auto& row : probs) preds.push_back(variant.decide(row));
                reports[idx].push_back(score_cascade(preds, split.test, model.stages().size(), options.limit));
            }
        }
    }

    std::vector<CascadeSummary> out;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        out.push_back(average_cascade_runs(reports[p], policies[p].label));
    }
    return out;
}

}  // namespace wqcascade
