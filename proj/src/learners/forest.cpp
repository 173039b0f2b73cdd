#include "gdm/learner_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdm {

double gini_impurity(std::span<const std::size_t> class_counts, std::size_t total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (auto c : class_counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

namespace {

// n * gini, i.e. n - sum(c^2) / n; additive over children.
double weighted_gini(const std::vector<std::size_t>& counts, std::size_t n) {
    if (n == 0) return 0.0;
    double sum_sq = 0.0;
    for (auto c : counts) sum_sq += static_cast<double>(c) * static_cast<double>(c);
    return static_cast<double>(n) - sum_sq / static_cast<double>(n);
}

struct TreeBuilder {
    const FeatureMatrix& x;
    std::span<const int> y;
    std::size_t m;
    const TreeOptions& options;
    SeedStream& rng;
    std::vector<DecisionTree::Node> nodes;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = std::numeric_limits<double>::infinity();
    };

    int build(std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();

        std::vector<std::size_t> counts(m, 0);
        for (auto r : rows) ++counts[static_cast<std::size_t>(y[r])];
        const auto majority = std::max_element(counts.begin(), counts.end()) - counts.begin();
        nodes[static_cast<std::size_t>(id)].label = static_cast<int>(majority);

        const bool pure = counts[static_cast<std::size_t>(majority)] == rows.size();
        if (pure || rows.size() < options.min_split || depth >= options.max_depth) return id;

        const Split best = find_split(rows, counts);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : rows) {
            (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        const int l = build(std::move(left), depth + 1);
        const int rgt = build(std::move(right), depth + 1);
        auto& node = nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = rgt;
        return id;
    }

    Split find_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& node_counts) {
        const auto d = static_cast<std::size_t>(x.cols());
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::size_t wanted = d;
        if (options.features_per_split != 0 && options.features_per_split < d) {
            wanted = options.features_per_split;
            rng.shuffle(std::span<std::size_t>(order));
        }

        // Features are visited in random order until `wanted` non-constant ones
        // have been evaluated.
        Split best;
        std::size_t evaluated = 0;
        std::vector<std::pair<double, int>> vals(rows.size());
        std::vector<std::size_t> left(m);
        std::vector<std::size_t> right(m);
        for (std::size_t fi = 0; fi < d && evaluated < wanted; ++fi) {
            const auto f = static_cast<Eigen::Index>(order[fi]);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                vals[i] = {x(static_cast<Eigen::Index>(rows[i]), f), y[rows[i]]};
            }
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue;
            ++evaluated;

            std::fill(left.begin(), left.end(), 0);
            right = node_counts;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                const auto c = static_cast<std::size_t>(vals[i].second);
                ++left[c];
                --right[c];
                if (vals[i].first == vals[i + 1].first) continue;
                const std::size_t nl = i + 1;
                const double score = weighted_gini(left, nl) + weighted_gini(right, vals.size() - nl);
                if (score < best.score) {
                    double thr = 0.5 * (vals[i].first + vals[i + 1].first);
                    if (!(thr < vals[i + 1].first)) thr = vals[i].first;
                    best = {static_cast<int>(f), thr, score};
                }
            }
        }
        return best;
    }
};

}  // namespace

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw LearnerError("decision tree has no nodes");
    for (const auto& n : nodes_) {
        if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= nodes_.size() ||
                               static_cast<std::size_t>(n.right) >= nodes_.size())) {
            throw LearnerError("decision tree has a dangling child index");
        }
    }
}

DecisionTree DecisionTree::grow(const FeatureMatrix& x, std::span<const int> y, std::size_t num_classes,
                                std::span<const std::size_t> rows, const TreeOptions& options, SeedStream& rng) {
    if (rows.empty()) throw LearnerError("cannot grow a tree on zero rows");
    TreeBuilder b{x, y, num_classes, options, rng, {}};
    b.build(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
    return DecisionTree(std::move(b.nodes));
}

int DecisionTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> level(nodes_.size(), 0);
    std::size_t deepest = 0;
    // Children always have larger indices than their parent.
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (nodes_[i].feature >= 0) {
            level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

bool operator==(const DecisionTree& a, const DecisionTree& b) {
    if (a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        const auto& p = a.nodes_[i];
        const auto& q = b.nodes_[i];
        if (p.feature != q.feature || p.threshold != q.threshold || p.left != q.left || p.right != q.right ||
            p.label != q.label) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

RandomForestModel::RandomForestModel(LearnerSpec spec, std::size_t num_classes, std::size_t num_features,
                                     std::vector<DecisionTree> trees)
    : TrainedModel(std::move(spec), num_classes, num_features), trees_(std::move(trees)) {
    if (trees_.empty()) throw LearnerError("random_forest: zero trees");
}

std::shared_ptr<const RandomForestModel> RandomForestModel::train(const LearnerSpec& spec, const Dataset& train) {
    const auto& hp = spec.hyperparameters;
    const std::size_t num_trees = hp.count("trees");
    if (num_trees == 0) throw LearnerError("random_forest: zero trees");
    TreeOptions opt;
    opt.max_depth = hp.count("max_depth");
    opt.min_split = hp.count("min_split");
    const auto d = train.num_features();
    opt.features_per_split =
        hp.choice("feature_subsample") == "all" ? 0 : static_cast<std::size_t>(std::ceil(std::sqrt(double(d))));
    const bool bootstrap = hp.flag("bootstrap");

    const std::size_t n = train.size();
    const SeedStream root = SeedStream(spec.seed).derive("random_forest");
    std::vector<DecisionTree> trees;
    trees.reserve(num_trees);
    std::vector<std::size_t> rows(n);
    for (std::size_t t = 0; t < num_trees; ++t) {
        SeedStream rng = root.derive(t);
        if (bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        trees.push_back(DecisionTree::grow(train.features(), train.labels(), train.num_classes(), rows, opt, rng));
    }
    return std::make_shared<const RandomForestModel>(spec, train.num_classes(), d, std::move(trees));
}

void RandomForestModel::compute_scores(std::span<const double> x, std::span<double> out) const {
    for (const auto& t : trees_) out[static_cast<std::size_t>(t.predict(x))] += 1.0;
    for (auto& v : out) v /= static_cast<double>(trees_.size());
}

ParameterSet RandomForestModel::parameters() const {
    NamedArray sizes{"tree_sizes", {trees_.size()}, {}};
    NamedArray feature{"feature", {0}, {}};
    NamedArray threshold{"threshold", {0}, {}};
    NamedArray left{"left", {0}, {}};
    NamedArray right{"right", {0}, {}};
    NamedArray label{"label", {0}, {}};
    for (const auto& t : trees_) {
        sizes.values.push_back(static_cast<double>(t.nodes().size()));
        for (const auto& n : t.nodes()) {
            feature.values.push_back(n.feature);
            threshold.values.push_back(n.threshold);
            left.values.push_back(n.left);
            right.values.push_back(n.right);
            label.values.push_back(n.label);
        }
    }
    for (auto* a : {&feature, &threshold, &left, &right, &label}) a->shape = {a->values.size()};
    return {sizes, feature, threshold, left, right, label};
}

std::shared_ptr<const RandomForestModel> RandomForestModel::restore(const LearnerSpec& spec, std::size_t m,
                                                                    std::size_t d, const ParameterSet& params) {
    const auto& sizes = detail::find_array(params, "tree_sizes");
    const auto& feature = detail::find_array(params, "feature");
    const auto& threshold = detail::find_array(params, "threshold");
    const auto& left = detail::find_array(params, "left");
    const auto& right = detail::find_array(params, "right");
    const auto& label = detail::find_array(params, "label");
    const std::size_t total = feature.values.size();
    for (const auto* a : {&threshold, &left, &right, &label}) {
        if (a->values.size() != total) throw LearnerError("random_forest: node arrays differ in length");
    }
    std::vector<DecisionTree> trees;
    std::size_t offset = 0;
    for (double s : sizes.values) {
        const auto count = static_cast<std::size_t>(s);
        if (offset + count > total) throw LearnerError("random_forest: tree sizes exceed node count");
        std::vector<DecisionTree::Node> nodes(count);
        for (std::size_t i = 0; i < count; ++i) {
            auto& n = nodes[i];
            n.feature = static_cast<int>(feature.values[offset + i]);
            n.threshold = threshold.values[offset + i];
            n.left = static_cast<int>(left.values[offset + i]);
            n.right = static_cast<int>(right.values[offset + i]);
            n.label = static_cast<int>(label.values[offset + i]);
            if (n.label < 0 || static_cast<std::size_t>(n.label) >= m ||
                (n.feature >= 0 && static_cast<std::size_t>(n.feature) >= d)) {
                throw LearnerError("random_forest: stored node out of range");
            }
        }
        trees.emplace_back(std::move(nodes));
        offset += count;
    }
    return std::make_shared<const RandomForestModel>(spec, m, d, std::move(trees));
}

}  // namespace gdm
