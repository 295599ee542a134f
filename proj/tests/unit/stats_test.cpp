#include <gtest/gtest.h>

#include <random>
#include <vector>

#include <wqcascade/stats.hpp>

#include "oracles.hpp"

using namespace wqcascade;

TEST(Quantile, InterpolatesBetweenOrderStatistics) {
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5, 6, 7, 8}, 0.25), 2.75);
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5, 6, 7, 8}, 0.5), 4.5);
    EXPECT_DOUBLE_EQ(quantile({0, 10, 20, 30}, 0.5), 15.0);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.3), 7.0);
    EXPECT_DOUBLE_EQ(quantile({3, 1, 2}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile({3, 1, 2}, 1.0), 3.0);
}

TEST(Quantile, MatchesOracleOnRandomSamples) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> size(1, 60);
    std::uniform_real_distribution<double> value(0, 500);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(static_cast<std::size_t>(size(rng)));
        for (auto& x : v) x = std::floor(value(rng));
        for (double p : {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0}) {
            EXPECT_NEAR(quantile(v, p), oracle::quantile7(v, p), 1e-9);
        }
    }
}

TEST(Stats, MeanAndSampleStd) {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_DOUBLE_EQ(mean(v), 5.0);
    EXPECT_NEAR(sample_stddev(v), 2.138089935299395, 1e-12);
    const std::vector<double> one{3.5};
    EXPECT_EQ(sample_stddev(one), 0.0);
}

TEST(Stats, AverageRanksHandleTies) {
    const std::vector<double> v{10, 20, 20, 5};
    EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Stats, SpearmanExtremes) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> up{2, 4, 8, 16, 32};
    const std::vector<double> down{5, 4, 3, 2, 1};
    const std::vector<double> flat{1, 1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
    EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
    EXPECT_EQ(spearman(x, flat), 0.0);
}
