#include "wqcascade/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_codec.hpp"
#include "wqcascade/error.hpp"
#include "wqcascade/parallel.hpp"

namespace wqcascade {
namespace {

constexpr int kForestFormatVersion = 1;
constexpr const char* kForestFormat = "wqcascade.forest";

struct Entry {
    double value;
    Label label;
};

class SplitScanner {
public:
    explicit SplitScanner(const LabeledDataset& data) : data_(data) {}

    /// Scans one feature over `rows` and replaces `best` when it finds a
    /// strictly better split.
    void scan(std::span<const std::size_t> rows, std::size_t feature, ClassCounts parent, double parent_gini,
              std::optional<SplitChoice>& best) {
        entries_.clear();
        for (std::size_t r : rows) entries_.push_back({data_.at(r, feature), data_.labels[r]});
        std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

        const double n = static_cast<double>(parent.total());
        ClassCounts left;
        for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
            left.add(entries_[i].label);
            const double lo = entries_[i].value;
            const double hi = entries_[i + 1].value;
            if (!(lo < hi)) continue;

            const ClassCounts right{parent.below - left.below, parent.above - left.above};
            const double gain = parent_gini - (left.total() / n) * gini_impurity(left) -
                                (right.total() / n) * gini_impurity(right);
            if (gain <= kGainTolerance) continue;
            if (best && !(gain > best->gain + kGainTolerance)) continue;

            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold < hi)) threshold = lo;
            best = SplitChoice{feature, threshold, gain};
        }
    }

private:
    const LabeledDataset& data_;
    std::vector<Entry> entries_;
};

ClassCounts count_rows(const LabeledDataset& data, std::span<const std::size_t> rows) {
    ClassCounts c;
    for (std::size_t r : rows) c.add(data.labels[r]);
    return c;
}

class TreeBuilder {
public:
    TreeBuilder(const LabeledDataset& data, const ForestParams& params, Rng& rng)
        : data_(data),
          params_(params),
          mtry_(params.resolved_max_features(data.cols())),
          rng_(rng),
          scanner_(data),
          features_(data.cols()) {
        std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    std::vector<TreeNode> build(std::span<const std::size_t> rows) {
        rows_.assign(rows.begin(), rows.end());
        nodes_.clear();
        grow(0, rows_.size(), 0);
        return std::move(nodes_);
    }

private:
    std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        std::span<const std::size_t> rows(rows_.data() + begin, end - begin);
        nodes_.push_back(TreeNode{});
        nodes_[id].counts = count_rows(data_, rows);
        const ClassCounts counts = nodes_[id].counts;

        const bool splittable = depth < params_.max_depth && rows.size() >= params_.min_samples_split &&
                                counts.below > 0 && counts.above > 0;
        if (!splittable) return id;

        draw_candidates();
        std::optional<SplitChoice> best;
        const double parent_gini = gini_impurity(counts);
        for (std::size_t f : candidates_) scanner_.scan(rows, f, counts, parent_gini, best);
        if (!best) return id;

        const std::size_t feature = best->feature;
        const double threshold = best->threshold;
        auto mid_it = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                     [&](std::size_t r) { return data_.at(r, feature) <= threshold; });
        const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());

        nodes_[id].feature = static_cast<std::int32_t>(feature);
        nodes_[id].threshold = threshold;
        const std::int32_t left = grow(begin, mid, depth + 1);
        const std::int32_t right = grow(mid, end, depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void draw_candidates() {
        const std::size_t n = features_.size();
        for (std::size_t i = 0; i < mtry_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(features_[i], features_[pick(rng_)]);
        }
        candidates_.assign(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
        std::sort(candidates_.begin(), candidates_.end());
    }

    const LabeledDataset& data_;
    const ForestParams& params_;
    std::size_t mtry_;
    Rng& rng_;
    SplitScanner scanner_;
    std::vector<std::size_t> features_;
    std::vector<std::size_t> candidates_;
    std::vector<std::size_t> rows_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

std::size_t ForestParams::resolved_max_features(std::size_t n_features) const {
    if (max_features != 0) return max_features;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
}

void ForestParams::validate(std::size_t n_features) const {
    if (n_features == 0) throw ConfigError("forest needs at least one feature");
    if (n_estimators < 1) throw ConfigError("n_estimators must be at least 1");
    if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
    if (min_samples_split < 2) throw ConfigError("min_samples_split must be at least 2");
    const auto mf = resolved_max_features(n_features);
    if (mf < 1 || mf > n_features) {
        throw ConfigError("max_features must lie in [1, " + std::to_string(n_features) + "]");
    }
}

double gini_impurity(ClassCounts counts) {
    const auto n = counts.total();
    if (n == 0) throw ConfigError("gini impurity of an empty node");
    const double pb = static_cast<double>(counts.below) / n;
    const double pa = static_cast<double>(counts.above) / n;
    return 1.0 - pb * pb - pa * pa;
}

std::optional<SplitChoice> best_split(const LabeledDataset& data, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> candidate_features) {
    if (rows.size() < 2) return std::nullopt;
    std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
    for (std::size_t f : features) {
        if (f >= data.cols()) throw ConfigError("candidate feature index out of range");
    }

    const ClassCounts parent = count_rows(data, rows);
    if (parent.below == 0 || parent.above == 0) return std::nullopt;
    const double parent_gini = gini_impurity(parent);
    SplitScanner scanner(data);
    std::optional<SplitChoice> best;
    for (std::size_t f : features) scanner.scan(rows, f, parent, parent_gini, best);
    return best;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw ValidationError("decision tree has no nodes");
    const auto n = static_cast<std::int32_t>(nodes_.size());
    for (std::int32_t i = 0; i < n; ++i) {
        const auto& node = nodes_[i];
        if (node.is_leaf()) {
            if (node.counts.total() == 0) throw ValidationError("decision tree leaf without samples");
        } else if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
            throw ValidationError("decision tree node " + std::to_string(i) + " has invalid children");
        }
    }
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes_.front();
    while (!node->is_leaf()) {
        node = &nodes_[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
    }
    return *node;
}

double DecisionTree::below_fraction(std::span<const double> x) const {
    const auto& c = leaf_for(x).counts;
    return static_cast<double>(c.below) / static_cast<double>(c.total());
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> level(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes_[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

DecisionTree grow_tree(const LabeledDataset& data, std::span<const std::size_t> rows, const ForestParams& params,
                       Rng& rng) {
    if (rows.empty()) throw ConfigError("cannot grow a tree on zero samples");
    TreeBuilder builder(data, params, rng);
    return DecisionTree(builder.build(rows));
}

Forest::Forest(ForestParams params, std::vector<std::string> feature_names, std::vector<std::uint64_t> tree_seeds,
               std::vector<DecisionTree> trees)
    : params_(params),
      feature_names_(std::move(feature_names)),
      tree_seeds_(std::move(tree_seeds)),
      trees_(std::move(trees)) {
    if (trees_.size() != params_.n_estimators || tree_seeds_.size() != trees_.size()) {
        throw ValidationError("forest tree count does not match n_estimators");
    }
    const auto f = static_cast<std::int32_t>(feature_names_.size());
    for (const auto& tree : trees_) {
        for (const auto& node : tree.nodes()) {
            if (!node.is_leaf() && node.feature >= f) throw ValidationError("tree references an unknown feature");
        }
    }
}

double Forest::predict_proba(std::span<const double> x) const {
    if (x.size() != feature_names_.size()) {
        throw ValidationError("feature vector has " + std::to_string(x.size()) + " values, forest expects " +
                              std::to_string(feature_names_.size()));
    }
    if (trees_.empty()) throw ValidationError("forest has no trees");
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.below_fraction(x);
    return sum / static_cast<double>(trees_.size());
}

Label Forest::predict_class(std::span<const double> x) const {
    return predict_proba(x) > 0.5 ? Label::Below : Label::Above;
}

std::vector<double> Forest::feature_importance() const {
    std::vector<double> importance(feature_names_.size(), 0.0);
    for (const auto& tree : trees_) {
        const auto nodes = tree.nodes();
        const double n_root = nodes.front().counts.total();
        for (const auto& node : nodes) {
            if (node.is_leaf()) continue;
            const auto& l = nodes[static_cast<std::size_t>(node.left)].counts;
            const auto& r = nodes[static_cast<std::size_t>(node.right)].counts;
            const double decrease = node.counts.total() * gini_impurity(node.counts) -
                                    l.total() * gini_impurity(l) - r.total() * gini_impurity(r);
            importance[static_cast<std::size_t>(node.feature)] += decrease / n_root;
        }
    }
    if (!trees_.empty()) {
        for (auto& v : importance) v /= static_cast<double>(trees_.size());
    }
    const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
    if (total > 0.0) {
        for (auto& v : importance) v /= total;
    }
    return importance;
}

Forest fit_forest(const LabeledDataset& data, const ForestParams& params, unsigned threads) {
    if (data.rows() == 0) throw ConfigError("cannot fit a forest on an empty dataset");
    params.validate(data.cols());

    ForestParams resolved = params;
    resolved.max_features = params.resolved_max_features(data.cols());

    std::vector<std::uint64_t> seeds(resolved.n_estimators);
    for (std::size_t t = 0; t < seeds.size(); ++t) seeds[t] = derive_seed(resolved.seed, t);

    std::vector<DecisionTree> trees(resolved.n_estimators);
    const std::size_t n = data.rows();
    parallel_for(trees.size(), threads, [&](std::size_t t) {
        Rng rng(seeds[t]);
        std::vector<std::size_t> rows(n);
        if (resolved.bootstrap) {
            std::uniform_int_distribution<std::size_t> draw(0, n - 1);
            for (auto& r : rows) r = draw(rng);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        trees[t] = grow_tree(data, rows, resolved, rng);
    });

    Forest forest(resolved, data.feature_names, std::move(seeds), std::move(trees));
    forest.set_single_class(data.count(Label::Below) == 0 || data.count(Label::Above) == 0);
    return forest;
}

namespace detail {

Json params_to_json(const ForestParams& p) {
    return Json{{"n_estimators", p.n_estimators},       {"max_depth", p.max_depth},
                {"min_samples_split", p.min_samples_split}, {"max_features", p.max_features},
                {"seed", p.seed},                        {"bootstrap", p.bootstrap}};
}

ForestParams params_from_json(const Json& j) {
    ForestParams p;
    p.n_estimators = field<std::size_t>(j, "n_estimators");
    p.max_depth = field<std::size_t>(j, "max_depth");
    p.min_samples_split = field<std::size_t>(j, "min_samples_split");
    p.max_features = field<std::size_t>(j, "max_features");
    p.seed = field<std::uint64_t>(j, "seed");
    p.bootstrap = field<bool>(j, "bootstrap");
    return p;
}

Json forest_to_json(const Forest& f) {
    Json trees = Json::array();
    for (const auto& tree : f.trees()) {
        Json nodes = Json::array();
        for (const auto& n : tree.nodes()) {
            nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.counts.below, n.counts.above}));
        }
        trees.push_back(std::move(nodes));
    }
    return Json{{"format", kForestFormat},
                {"version", kForestFormatVersion},
                {"params", params_to_json(f.params())},
                {"feature_names", std::vector<std::string>(f.feature_names().begin(), f.feature_names().end())},
                {"single_class", f.single_class()},
                {"tree_seeds", std::vector<std::uint64_t>(f.tree_seeds().begin(), f.tree_seeds().end())},
                {"trees", std::move(trees)}};
}

Forest forest_from_json(const Json& j) {
    if (field<std::string>(j, "format") != kForestFormat) throw ValidationError("not a forest document");
    if (field<int>(j, "version") != kForestFormatVersion) {
        throw ValidationError("unsupported forest format version");
    }
    auto params = params_from_json(j.at("params"));
    auto names = field<std::vector<std::string>>(j, "feature_names");
    auto seeds = field<std::vector<std::uint64_t>>(j, "tree_seeds");
    std::vector<DecisionTree> trees;
    try {
        for (const auto& jt : j.at("trees")) {
            std::vector<TreeNode> nodes;
            nodes.reserve(jt.size());
            for (const auto& jn : jt) {
                if (!jn.is_array() || jn.size() != 6) throw ValidationError("tree node must have 6 entries");
                TreeNode n;
                n.feature = jn[0].get<std::int32_t>();
                n.threshold = jn[1].get<double>();
                n.left = jn[2].get<std::int32_t>();
                n.right = jn[3].get<std::int32_t>();
                n.counts.below = jn[4].get<std::uint32_t>();
                n.counts.above = jn[5].get<std::uint32_t>();
                nodes.push_back(n);
            }
            trees.emplace_back(std::move(nodes));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed tree in forest document: ") + e.what());
    }
    Forest f(params, std::move(names), std::move(seeds), std::move(trees));
    f.set_single_class(field<bool>(j, "single_class"));
    return f;
}

Json parse_json(std::string_view text, std::string_view what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

}  // namespace detail

std::string Forest::to_json() const { return detail::forest_to_json(*this).dump(); }

Forest Forest::from_json(std::string_view text) { return detail::forest_from_json(detail::parse_json(text, "forest JSON")); }

}  // namespace wqcascade
