#include <gtest/gtest.h>

#include <wqcascade/error.hpp>
#include <wqcascade/eval.hpp>
#include <wqcascade/stats.hpp>
#include <wqcascade/synth.hpp>

#include "fixtures.hpp"

using namespace wqcascade;

namespace {

Split synth_split(std::uint64_t seed) {
    return apply_split(remove_outliers(generate_dataset(SynthConfig::calibrated(seed))), SplitSpec::set1());
}

RunMetrics metrics(double accuracy, std::optional<double> tp, std::vector<double> importance = {0.5, 0.5}) {
    RunMetrics m;
    m.n_test = 10;
    m.n_above = tp ? 2 : 0;
    m.accuracy = accuracy;
    m.tp_rate = tp;
    m.importance = std::move(importance);
    return m;
}

ForestParams params(std::size_t trees) {
    ForestParams p;
    p.n_estimators = trees;
    return p;
}

ExperimentOptions options(std::size_t runs, std::uint64_t seed = 0) {
    ExperimentOptions o;
    o.n_runs = runs;
    o.base_seed = seed;
    o.threads = 1;
    return o;
}

double train_median(const Split& s) {
    std::vector<double> v;
    for (const auto& m : s.train.records) v.push_back(static_cast<double>(m.ecoli));
    return median(v);
}

}  // namespace

TEST(MeanStd, Basics) {
    const std::vector<double> one{0.3};
    EXPECT_EQ(mean_std(one), (MeanStd{0.3, 0.0}));
    const std::vector<double> two{0.4, 0.6};
    const auto r = mean_std(two);
    EXPECT_DOUBLE_EQ(r.mean, 0.5);
    EXPECT_NEAR(r.std, 0.14142135623730953, 1e-12);
    EXPECT_THROW(mean_std(std::vector<double>{}), ConfigError);
}

TEST(AverageRuns, SingleRunIsItself) {
    const std::vector<RunMetrics> runs{metrics(0.9, 0.25)};
    const auto r = average_runs(runs, 150, {"a", "b"});
    EXPECT_EQ(r.n_runs, 1u);
    EXPECT_EQ(r.n_test, 10u);
    EXPECT_EQ(r.accuracy, (MeanStd{0.9, 0.0}));
    ASSERT_TRUE(r.tp_rate);
    EXPECT_EQ(*r.tp_rate, (MeanStd{0.25, 0.0}));
    EXPECT_EQ(r.importance[0], (MeanStd{0.5, 0.0}));
}

TEST(AverageRuns, IdenticalRunsHaveZeroStd) {
    const std::vector<RunMetrics> runs{metrics(0.8, 0.5), metrics(0.8, 0.5)};
    const auto r = average_runs(runs, 150, {"a", "b"});
    EXPECT_EQ(r.accuracy.std, 0.0);
    EXPECT_EQ(r.tp_rate->std, 0.0);
}

TEST(AverageRuns, MeansTp) {
    const std::vector<RunMetrics> runs{metrics(0.8, 0.4), metrics(0.9, 0.6)};
    const auto r = average_runs(runs, 150, {"a", "b"});
    EXPECT_DOUBLE_EQ(r.tp_rate->mean, 0.5);
    EXPECT_DOUBLE_EQ(r.accuracy.mean, 0.85);
}

TEST(AverageRuns, AbsentTpStaysAbsent) {
    const std::vector<RunMetrics> runs{metrics(1.0, std::nullopt), metrics(1.0, std::nullopt)};
    EXPECT_FALSE(average_runs(runs, 150, {"a", "b"}).tp_rate);
}

TEST(AverageRuns, MixedShapesRejected) {
    EXPECT_THROW(average_runs(std::vector<RunMetrics>{}, 150, {}), ValidationError);
    const std::vector<RunMetrics> tp_mix{metrics(0.8, 0.4), metrics(0.8, std::nullopt)};
    EXPECT_THROW(average_runs(tp_mix, 150, {"a", "b"}), ValidationError);
    const std::vector<RunMetrics> width{metrics(0.8, 0.4), metrics(0.8, 0.4, {1.0})};
    EXPECT_THROW(average_runs(width, 150, {"a", "b"}), ValidationError);
    auto other = metrics(0.8, 0.4);
    other.n_test = 11;
    const std::vector<RunMetrics> sizes{metrics(0.8, 0.4), other};
    EXPECT_THROW(average_runs(sizes, 150, {"a", "b"}), ValidationError);
}

TEST(SingleModel, OneRunHasZeroStd) {
    const auto r = single_model_experiment(synth_split(1), 150, params(10), options(1));
    EXPECT_EQ(r.n_runs, 1u);
    EXPECT_EQ(r.accuracy.std, 0.0);
    ASSERT_TRUE(r.tp_rate);
    EXPECT_EQ(r.tp_rate->std, 0.0);
    EXPECT_EQ(r.feature_names, default_features());
    EXPECT_EQ(r.importance.size(), 5u);
}

TEST(SingleModel, NoAboveGivesAbsentTp) {
    const auto r = single_model_experiment(synth_split(1), 1e7, params(5), options(2));
    EXPECT_EQ(r.n_above, 0u);
    EXPECT_FALSE(r.tp_rate);
}

TEST(SingleModel, ReproducibleAndBounded) {
    const Split s = synth_split(2);
    const auto a = single_model_experiment(s, 150, params(15), options(4, 9));
    const auto b = single_model_experiment(s, 150, params(15), options(4, 9));
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(*a.tp_rate, *b.tp_rate);
    EXPECT_EQ(a.importance, b.importance);
    EXPECT_GE(a.accuracy.mean, 0.0);
    EXPECT_LE(a.accuracy.mean, 1.0);
    EXPECT_GE(a.accuracy.std, 0.0);
    const auto c = single_model_experiment(s, 150, params(15), options(4, 10));
    EXPECT_NE(a.accuracy, c.accuracy);
}

TEST(SingleModel, NotWorseThanMajorityBaseline) {
    const Split s = synth_split(3);
    for (double limit : {60.0, 150.0, 250.0}) {
        const auto r = single_model_experiment(s, limit, params(30), options(5));
        const double baseline = majority_accuracy(label(s.train, limit, default_features()),
                                                  label(s.test, limit, default_features()));
        EXPECT_GE(r.accuracy.mean, baseline - 0.05) << limit;
    }
}

TEST(SingleModel, EmptySidesRejected) {
    Split s = synth_split(1);
    s.test.records.clear();
    EXPECT_THROW(single_model_experiment(s, 150, params(2), options(1)), ConfigError);
}

TEST(MajorityAccuracy, MatchesClassShare) {
    const auto train = label(fixtures::from_ecoli({1, 2, 3, 400}), 250, default_features());
    const auto test = label(fixtures::from_ecoli({1, 500, 600, 700, 5}), 250, default_features());
    EXPECT_DOUBLE_EQ(majority_accuracy(train, test), 0.4);
}

TEST(LimitSweep, RejectsBadLimits) {
    const Split s = synth_split(1);
    EXPECT_THROW(limit_sweep(s, std::vector<double>{}, params(2), options(1)), ConfigError);
    EXPECT_THROW(limit_sweep(s, std::vector<double>{50, 50}, params(2), options(1)), ConfigError);
    EXPECT_THROW(limit_sweep(s, std::vector<double>{150, 50}, params(2), options(1)), ConfigError);
}

TEST(LimitSweep, PointsInOrderAndMatchSingleRuns) {
    const Split s = synth_split(1);
    const std::vector<double> limits{10, 50, 150};
    const auto curve = limit_sweep(s, limits, params(10), options(3));
    ASSERT_EQ(curve.points.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(curve.points[i].limit, limits[i]);
        const auto single = single_model_experiment(s, limits[i], params(10), options(3));
        EXPECT_EQ(curve.points[i].accuracy, single.accuracy);
    }
    std::vector<double> tp;
    for (const auto& p : curve.points) tp.push_back(p.tp_rate->mean);
    EXPECT_LT(spearman(limits, tp), 0.0);
}

TEST(LimitSweep, MedianLimitIsBalanced) {
    const Split s = synth_split(1);
    const std::vector<double> limits{train_median(s)};
    const auto curve = limit_sweep(s, limits, params(100), options(20));
    ASSERT_EQ(curve.points.size(), 1u);
    EXPECT_LE(std::abs(curve.points[0].accuracy.mean - curve.points[0].tp_rate->mean), 0.15);
}

TEST(CascadeSummary, AveragesRuns) {
    CascadeReport a;
    a.n_test = 10;
    a.n_above_limit = 2;
    a.true_positive = 4;
    a.true_positive_rate = 0.5;
    a.false_negative = 0;
    a.false_negative_rate = 0.0;
    a.suspects = 6;
    a.stage_exits = {3, 1};
    a.double_weak_exits = {0, 0};
    CascadeReport b = a;
    b.true_positive = 6;
    b.true_positive_rate = 0.75;
    b.suspects = 4;
    b.stage_exits = {5, 1};
    const std::vector<CascadeReport> runs{a, b};
    const auto s = average_cascade_runs(runs, "x");
    EXPECT_EQ(s.label, "x");
    EXPECT_EQ(s.n_runs, 2u);
    EXPECT_DOUBLE_EQ(s.true_positive.mean, 5.0);
    EXPECT_DOUBLE_EQ(s.true_positive_rate->mean, 0.625);
    EXPECT_DOUBLE_EQ(s.suspects.mean, 5.0);
    EXPECT_EQ(s.stage_exits, (std::vector<double>{4.0, 1.0}));
    b.n_test = 11;
    const std::vector<CascadeReport> mixed{a, b};
    EXPECT_THROW(average_cascade_runs(mixed), ValidationError);
}

TEST(CascadeExperiment, SharedTrainingMatchesDirectFit) {
    const Split s = synth_split(1);
    ForestParams p = params(10);
    CascadeExperimentOptions o;
    o.n_runs = 2;
    o.base_seed = 5;
    o.threads = 1;
    const std::vector<NamedPolicy> policies{{"u80", ThresholdPolicy::uniform(0.80)},
                                            {"u70", ThresholdPolicy::uniform(0.70)},
                                            {"all", ThresholdPolicy::all_adjustments()}};
    const auto summaries = cascade_experiment(s, p, policies, o);
    ASSERT_EQ(summaries.size(), 3u);
    for (std::size_t i = 0; i < policies.size(); ++i) {
        EXPECT_EQ(summaries[i].label, policies[i].label);
        ASSERT_EQ(summaries[i].runs.size(), 2u);
        for (std::size_t run = 0; run < 2; ++run) {
            p.seed = derive_seed(5, run);
            const auto model = fit_cascade(s.train, p, policies[i].policy, 6, default_features(), 1);
            const auto direct = evaluate_cascade(model, s.test, 250.0, 1);
            EXPECT_EQ(summaries[i].runs[run].true_positive, direct.true_positive) << i << " " << run;
            EXPECT_EQ(summaries[i].runs[run].false_negative, direct.false_negative) << i << " " << run;
            EXPECT_EQ(summaries[i].runs[run].stage_exits, direct.stage_exits) << i << " " << run;
        }
    }
    EXPECT_GE(summaries[1].true_positive.mean, summaries[0].true_positive.mean);
}
