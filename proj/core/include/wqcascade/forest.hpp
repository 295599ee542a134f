#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wqcascade/dataio.hpp"
#include "wqcascade/rng.hpp"

namespace wqcascade {

/// Random-forest hyperparameters. Defaults are those of the single-model
/// experiments; cascades use 800 estimators.
struct ForestParams {
    std::size_t n_estimators = 100;
    std::size_t max_depth = 10;
    std::size_t min_samples_split = 6;
    /// Candidate features per split; 0 selects ceil(sqrt(F)).
    std::size_t max_features = 0;
    std::uint64_t seed = 0;
    /// Test hook: when false every tree sees the full training set once.
    bool bootstrap = true;

    std::size_t resolved_max_features(std::size_t n_features) const;
    /// ConfigError unless every field is in range for `n_features` columns.
    void validate(std::size_t n_features) const;

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct ClassCounts {
    std::uint32_t below = 0;
    std::uint32_t above = 0;

    std::uint32_t total() const noexcept { return below + above; }
    void add(Label l) noexcept { (l == Label::Below ? below : above) += 1; }

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

/// 1 - p_below^2 - p_above^2. ConfigError for an empty node.
double gini_impurity(ClassCounts counts);

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    /// Weighted impurity decrease G(parent) - nL/n G(L) - nR/n G(R).
    double gain = 0.0;
};

/// Gains closer than this are treated as equal.
inline constexpr double kGainTolerance = 1e-12;

/// Exhaustive CART split search over `rows` (indices into `data`, repeats
/// allowed) and `candidate_features`. Thresholds are midpoints between
/// consecutive distinct values; a sample goes left when its value is <= the
/// threshold. The largest gain wins; ties within kGainTolerance go to the
/// lowest feature index, then the lowest threshold. Returns nullopt when no
/// split has a positive gain.
std::optional<SplitChoice> best_split(const LabeledDataset& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> candidate_features);

/// Flat node of a decision tree. Every node records the class counts of the
/// training samples that reached it; internal nodes also carry a split.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    ClassCounts counts;

    bool is_leaf() const noexcept { return feature < 0; }

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    /// ValidationError on dangling child links or empty leaves.
    explicit DecisionTree(std::vector<TreeNode> nodes);

    std::span<const TreeNode> nodes() const noexcept { return nodes_; }
    const TreeNode& root() const { return nodes_.front(); }
    const TreeNode& leaf_for(std::span<const double> x) const;
    /// Fraction of Below samples in the leaf `x` reaches.
    double below_fraction(std::span<const double> x) const;
    std::size_t depth() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

/// Grows one CART tree on `rows` (already bootstrapped) drawing the
/// per-split candidate features from `rng`.
DecisionTree grow_tree(const LabeledDataset& data, std::span<const std::size_t> rows, const ForestParams& params,
                       Rng& rng);

class Forest {
public:
    Forest() = default;
    Forest(ForestParams params, std::vector<std::string> feature_names, std::vector<std::uint64_t> tree_seeds,
           std::vector<DecisionTree> trees);

    const ForestParams& params() const noexcept { return params_; }
    std::span<const std::string> feature_names() const noexcept { return feature_names_; }
    std::span<const std::uint64_t> tree_seeds() const noexcept { return tree_seeds_; }
    std::span<const DecisionTree> trees() const noexcept { return trees_; }
    std::size_t n_features() const noexcept { return feature_names_.size(); }

    /// True when the training labels held a single class.
    bool single_class() const noexcept { return single_class_; }
    void set_single_class(bool v) noexcept { single_class_ = v; }

    /// Mean over trees of the Below fraction at the reached leaf.
    double predict_proba(std::span<const double> x) const;
    /// Below iff predict_proba(x) > 0.5; an exact 0.5 is Above.
    Label predict_class(std::span<const double> x) const;

    /// Mean decrease in impurity, averaged over trees and normalized to sum
    /// to 1. All zeros when no tree has a split.
    std::vector<double> feature_importance() const;

    std::string to_json() const;
    static Forest from_json(std::string_view text);

    friend bool operator==(const Forest&, const Forest&) = default;

private:
    ForestParams params_;
    std::vector<std::string> feature_names_;
    std::vector<std::uint64_t> tree_seeds_;
    std::vector<DecisionTree> trees_;
    bool single_class_ = false;
};

/// Trains `params.n_estimators` trees. Tree t draws its bootstrap sample and
/// split candidates from an RNG seeded with derive_seed(params.seed, t), so
/// the result does not depend on `threads` (0 = all cores).
Forest fit_forest(const LabeledDataset& data, const ForestParams& params, unsigned threads = 0);

}  // namespace wqcascade
