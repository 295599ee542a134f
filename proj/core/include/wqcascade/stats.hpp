#pragma once

#include <span>
#include <vector>

namespace wqcascade {

/// Quantile by linear interpolation between closest order statistics
/// (position h = (n - 1) * p on the sorted sample). `sorted` must be
/// ascending and non-empty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Same rule on an unsorted sample.
double quantile(std::vector<double> values, double p);

double median(std::vector<double> values);

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

/// Ranks starting at 1, ties receive the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation. Returns 0 when either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace wqcascade
