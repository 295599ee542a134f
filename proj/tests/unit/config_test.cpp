#include <gtest/gtest.h>

#include <fstream>

#include <wqcascade/error.hpp>

#include "config.hpp"
#include "fixtures.hpp"

using namespace wqcascade;
using namespace wqcascade::cli;

namespace {

std::filesystem::path write_file(const fixtures::TempDir& dir, const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST(Settings, ReadsSectionsAndComments) {
    fixtures::TempDir dir;
    const auto path = write_file(dir, "run.ini",
                                 "; experiment\n[model]\nestimators = 50\n# depth\nmax_depth = 8\n\n"
                                 "[run]\nseed = 7\nout = \"results dir\"\n");
    const auto s = read_settings_file(path);
    EXPECT_EQ(s.at("model.estimators"), "50");
    EXPECT_EQ(s.at("model.max_depth"), "8");
    EXPECT_EQ(s.at("run.seed"), "7");
    EXPECT_EQ(s.at("run.out"), "results dir");
}

TEST(Settings, Errors) {
    fixtures::TempDir dir;
    EXPECT_THROW(read_settings_file(dir / "missing.ini"), IoError);
    EXPECT_THROW(read_settings_file(write_file(dir, "a.ini", "[model]\ntrees = 5\n")), ConfigError);
    EXPECT_THROW(read_settings_file(write_file(dir, "b.ini", "seed = 5\n")), ConfigError);
    EXPECT_THROW(read_settings_file(write_file(dir, "c.ini", "[model\nestimators = 5\n")), ConfigError);
}

TEST(Resolve, DefaultsDependOnKind) {
    const auto cascade = resolve({});
    EXPECT_EQ(cascade.kind, ModelKind::Cascade);
    EXPECT_EQ(cascade.forest.n_estimators, 800u);
    EXPECT_EQ(cascade.forest.max_depth, 10u);
    EXPECT_EQ(cascade.forest.min_samples_split, 6u);
    EXPECT_EQ(cascade.n_runs, 50u);
    EXPECT_EQ(cascade.stages, 6u);
    EXPECT_EQ(cascade.limit, 250.0);
    EXPECT_FALSE(cascade.policy_explicit);
    const auto single = resolve({{"model.kind", "single"}});
    EXPECT_EQ(single.forest.n_estimators, 100u);
    EXPECT_EQ(single.n_runs, 20u);
}

TEST(Resolve, RejectsBadValues) {
    EXPECT_THROW(resolve({{"data.path", "x.csv"}, {"data.synthetic", "true"}}), ConfigError);
    EXPECT_THROW(resolve({{"data.path", "x.csv"}, {"synth.seed", "3"}}), ConfigError);
    EXPECT_THROW(resolve({{"model.estimators", "many"}}), ConfigError);
    EXPECT_THROW(resolve({{"model.kind", "boosted"}}), ConfigError);
    EXPECT_THROW(resolve({{"run.limit", "0"}}), ConfigError);
    EXPECT_THROW(resolve({{"run.formats", "pdf"}}), ConfigError);
    EXPECT_THROW(resolve({{"split.spec", "uniform:k=5,offset=9"}}), ConfigError);
    EXPECT_THROW(resolve({{"policy.weak", "none,0.7"}}), ConfigError);
    EXPECT_THROW(resolve({{"synth.salinity_ecoli_corr", "0.3"}}), ConfigError);
    EXPECT_THROW(resolve({{"unknown.key", "1"}}), ConfigError);
}

TEST(Resolve, PolicySettings) {
    const auto all = resolve({{"policy.mode", "all"}});
    EXPECT_TRUE(all.policy_explicit);
    EXPECT_EQ(all.policy.mode, ThresholdMode::Increasing);
    EXPECT_EQ(all.policy.weak_thresholds, ThresholdPolicy::default_weak_thresholds(6));
    EXPECT_EQ(all.policy.feature_masks, ThresholdPolicy::default_feature_masks(6, default_features()));

    const auto custom = resolve({{"policy.weak", "none,0.7,0.7,0.75,0.75,0.75"},
                                 {"policy.weak_pairing", "current"},
                                 {"policy.comparison", "greater"},
                                 {"policy.theta", "0.85"}});
    EXPECT_EQ(custom.policy.uniform_theta, 0.85);
    EXPECT_FALSE(custom.policy.weak_thresholds[0]);
    EXPECT_EQ(custom.policy.weak_thresholds[3], 0.75);
    EXPECT_EQ(custom.policy.weak_pairing, WeakPairing::CurrentStage);
    EXPECT_EQ(custom.policy.comparison, Comparison::Greater);

    const auto masks = resolve({{"model.stages", "2"}, {"policy.feature_masks", "salinity+ghi,salinity"}});
    EXPECT_EQ(masks.policy.feature_masks,
              (std::vector<std::vector<std::string>>{{"salinity", "ghi"}, {"salinity"}}));
}

TEST(Resolve, SynthKeysImplySyntheticData) {
    const auto cfg = resolve({{"synth.seed", "12"}, {"synth.salinity_ecoli_corr", "-0.4"}});
    EXPECT_TRUE(cfg.use_synth);
    EXPECT_EQ(cfg.synth.seed, 12u);
    EXPECT_EQ(cfg.synth.salinity_ecoli_corr, -0.4);
}

TEST(ConfigHash, IgnoresOutputAndThreads) {
    const auto a = resolve({{"run.out", "a"}, {"run.threads", "1"}, {"run.seed", "3"}});
    const auto b = resolve({{"run.out", "b"}, {"run.threads", "8"}, {"run.seed", "3"}});
    const auto c = resolve({{"run.out", "a"}, {"run.threads", "1"}, {"run.seed", "4"}});
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(c));
    EXPECT_EQ(config_hash(a).size(), 64u);
}

TEST(ToIni, RoundTripsThroughSettingsFile) {
    fixtures::TempDir dir;
    const auto cfg = resolve({{"synth.seed", "5"},
                              {"data.thin", "479"},
                              {"split.spec", "temporal:year=2019"},
                              {"split.group", "high"},
                              {"policy.mode", "all"},
                              {"run.limits", "10,50,150"},
                              {"run.formats", "csv,json"}});
    const std::string text = to_ini(cfg);
    const auto back = resolve(read_settings_file(write_file(dir, "echo.ini", text)));
    EXPECT_EQ(to_ini(back), text);
    EXPECT_EQ(config_hash(back), config_hash(cfg));
}
