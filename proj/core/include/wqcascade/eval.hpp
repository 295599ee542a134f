#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wqcascade/cascade.hpp"
#include "wqcascade/dataio.hpp"
#include "wqcascade/forest.hpp"
#include "wqcascade/splits.hpp"

namespace wqcascade {

struct MeanStd {
    double mean = 0.0;
    /// Sample standard deviation; 0 for a single value.
    double std = 0.0;

    friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

/// Mean and sample standard deviation; ConfigError on an empty input.
MeanStd mean_std(std::span<const double> values);

/// Metrics of one trained single model on one test set.
struct RunMetrics {
    std::size_t n_test = 0;
    std::size_t n_above = 0;
    double accuracy = 0.0;
    /// Share of truly-Above test records predicted Above; absent when the
    /// test set has none.
    std::optional<double> tp_rate;
    std::vector<double> importance;

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

RunMetrics score_forest(const Forest& forest, const LabeledDataset& test);

struct SingleModelReport {
    double limit = 250.0;
    std::size_t n_test = 0;
    std::size_t n_above = 0;
    std::size_t n_runs = 0;
    MeanStd accuracy;
    std::optional<MeanStd> tp_rate;
    std::vector<std::string> feature_names;
    std::vector<MeanStd> importance;
};

/// Aggregates runs scored on the same test set. ValidationError when the
/// runs disagree on n_test, n_above, TP presence or importance length.
SingleModelReport average_runs(std::span<const RunMetrics> runs, double limit,
                               std::vector<std::string> feature_names);

struct ExperimentOptions {
    std::size_t n_runs = 20;
    std::uint64_t base_seed = 0;
    std::vector<std::string> features = default_features();
    unsigned threads = 0;
};

/// Run i trains with seed derive_seed(base_seed, i); `params.seed` is
/// ignored. ConfigError if either side of the split is empty.
SingleModelReport single_model_experiment(const Split& split, double limit, const ForestParams& params,
                                          const ExperimentOptions& options = {});

/// Accuracy of predicting the training majority class on every test record.
double majority_accuracy(const LabeledDataset& train, const LabeledDataset& test);

struct SweepPoint {
    double limit = 0.0;
    std::size_t n_above = 0;
    MeanStd accuracy;
    std::optional<MeanStd> tp_rate;
};

struct SweepCurve {
    std::vector<SweepPoint> points;
};

/// One single_model_experiment per limit. ConfigError unless `limits` is
/// non-empty and strictly increasing.
SweepCurve limit_sweep(const Split& split, std::span<const double> limits, const ForestParams& params,
                       const ExperimentOptions& options = {});

/// Per-policy averages of cascade runs.
struct CascadeSummary {
    std::string label;
    double limit = 250.0;
    std::size_t n_runs = 0;
    std::size_t n_test = 0;
    std::size_t n_above_limit = 0;
    MeanStd true_positive;
    std::optional<MeanStd> true_positive_rate;
    MeanStd false_negative;
    std::optional<MeanStd> false_negative_rate;
    MeanStd suspects;
    /// Mean excellent exits per stage.
    std::vector<double> stage_exits;
    std::vector<CascadeReport> runs;
};

/// ValidationError when the reports disagree on n_test, n_above_limit or
/// limit.
CascadeSummary average_cascade_runs(std::span<const CascadeReport> runs, std::string label = {});

struct NamedPolicy {
    std::string label;
    ThresholdPolicy policy;
};

struct CascadeExperimentOptions {
    std::size_t n_runs = 50;
    std::uint64_t base_seed = 0;
    std::size_t n_stages = 6;
    double limit = 250.0;
    std::vector<std::string> base_features = default_features();
    unsigned threads = 0;
    std::size_t min_stage_size = kDefaultMinStageSize;
};

/// Paired runs: in run i every policy is scored with forests trained from
/// seed derive_seed(base_seed, i). Policies with identical stage features
/// share one trained model per run.
std::vector<CascadeSummary> cascade_experiment(const Split& split, const ForestParams& params,
                                               std::span<const NamedPolicy> policies,
                                               const CascadeExperimentOptions& options = {});

}  // namespace wqcascade
