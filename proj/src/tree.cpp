#include "nlistack/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlistack/error.hpp"

namespace nlistack {

const std::vector<double>& DecisionTree::predict_probs(
    const Eigen::Ref<const Eigen::VectorXd>& z) const {
    int node = 0;
    while (nodes[node].feature >= 0)
        node = z[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                               : nodes[node].right;
    return nodes[node].class_probs;
}

namespace {

struct WorkItem {
    int node;
    int begin; // range in the shared index array
    int end;
    int depth;
};

double gini(const std::vector<double>& class_weight, double total) {
    if (total <= 0.0) return 0.0;
    double sum_sq = 0.0;
    for (const double w : class_weight) sum_sq += w * w;
    return 1.0 - sum_sq / (total * total);
}

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity(); // weighted child Gini
};

} // namespace

DecisionTree train_decision_tree(const Eigen::MatrixXd& Z, const std::vector<int>& y, int class_count,
                                 const std::vector<double>& weights,
                                 const std::vector<int>& indices, const TreeOptions& options,
                                 Rng& rng) {
    if (indices.empty()) throw DataError("decision tree: no training instances");
    if (options.min_leaf < 1) throw ConfigError("decision tree: min_leaf must be >= 1");
    const int d = static_cast<int>(Z.cols());

    DecisionTree tree;
    tree.class_count = class_count;
    std::vector<int> pool = indices; // partitioned in place as nodes split

    std::vector<int> all_features(d);
    for (int j = 0; j < d; ++j) all_features[j] = j;

    tree.nodes.emplace_back();
    std::vector<WorkItem> stack{{0, 0, static_cast<int>(pool.size()), 0}};
    std::vector<double> class_weight(class_count);
    std::vector<double> left_weight(class_count);

    while (!stack.empty()) {
        const WorkItem item = stack.back();
        stack.pop_back();
        const int n_node = item.end - item.begin;

        class_weight.assign(class_count, 0.0);
        double total = 0.0;
        for (int i = item.begin; i < item.end; ++i) {
            class_weight[y[pool[i]]] += weights[pool[i]];
            total += weights[pool[i]];
        }

        auto make_leaf = [&](int node) {
            auto& probs = tree.nodes[node].class_probs;
            probs = class_weight;
            double norm = total;
            if (norm <= 0.0) {
                // Degenerate all-zero weights: fall back to plain counts.
                probs.assign(class_count, 0.0);
                for (int i = item.begin; i < item.end; ++i) probs[y[pool[i]]] += 1.0;
                norm = static_cast<double>(n_node);
            }
            for (double& p : probs) p /= norm;
        };

        const bool pure = gini(class_weight, total) <= 0.0;
        const bool depth_capped = options.max_depth > 0 && item.depth >= options.max_depth;
        if (pure || depth_capped || n_node < 2 * options.min_leaf) {
            make_leaf(item.node);
            continue;
        }

        // Candidate features: all, or a random subset drawn per split.
        const std::vector<int>* candidates = &all_features;
        std::vector<int> subset;
        if (options.feature_subset > 0 && options.feature_subset < d) {
            subset = all_features;
            rng.shuffle(subset);
            subset.resize(options.feature_subset);
            std::sort(subset.begin(), subset.end());
            candidates = &subset;
        }

        SplitCandidate best;
        std::vector<std::pair<double, int>> values(n_node); // (feature value, pool index)
        for (const int j : *candidates) {
            for (int i = 0; i < n_node; ++i) {
                const int row = pool[item.begin + i];
                values[i] = {Z(row, j), row};
            }
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue; // constant feature

            if (options.random_thresholds) {
                // Extra-trees: a single uniform threshold in [min, max).
                const double lo = values.front().first;
                const double hi = values.back().first;
                const double cut = lo + rng.uniform_real01() * (hi - lo);
                left_weight.assign(class_count, 0.0);
                double left_total = 0.0;
                int left_n = 0;
                for (const auto& [value, row] : values) {
                    if (value > cut) break;
                    left_weight[y[row]] += weights[row];
                    left_total += weights[row];
                    ++left_n;
                }
                const int right_n = n_node - left_n;
                if (left_n < options.min_leaf || right_n < options.min_leaf) continue;
                double right_total = total - left_total;
                double impurity = 0.0;
                {
                    double right_sq = 0.0, left_sq = 0.0;
                    for (int k = 0; k < class_count; ++k) {
                        left_sq += left_weight[k] * left_weight[k];
                        const double rw = class_weight[k] - left_weight[k];
                        right_sq += rw * rw;
                    }
                    if (left_total > 0.0) impurity += left_total - left_sq / left_total;
                    if (right_total > 0.0) impurity += right_total - right_sq / right_total;
                }
                if (impurity < best.impurity) best = {j, cut, impurity};
                continue;
            }

            // Exhaustive mode: every boundary between distinct consecutive
            // values, threshold at the midpoint.
            left_weight.assign(class_count, 0.0);
            double left_total = 0.0;
            for (int i = 0; i + 1 < n_node; ++i) {
                const int row = values[i].second;
                left_weight[y[row]] += weights[row];
                left_total += weights[row];
                if (values[i].first == values[i + 1].first) continue;
                const int left_n = i + 1;
                const int right_n = n_node - left_n;
                if (left_n < options.min_leaf || right_n < options.min_leaf) continue;
                double left_sq = 0.0, right_sq = 0.0;
                for (int k = 0; k < class_count; ++k) {
                    left_sq += left_weight[k] * left_weight[k];
                    const double rw = class_weight[k] - left_weight[k];
                    right_sq += rw * rw;
                }
                const double right_total = total - left_total;
                double impurity = 0.0;
                if (left_total > 0.0) impurity += left_total - left_sq / left_total;
                if (right_total > 0.0) impurity += right_total - right_sq / right_total;
                if (impurity < best.impurity) {
                    best.feature = j;
                    best.threshold = 0.5 * (values[i].first + values[i + 1].first);
                    best.impurity = impurity;
                }
            }
        }

        if (best.feature < 0) {
            make_leaf(item.node);
            continue;
        }

        // Partition the node's index range by the chosen split.
        const auto mid = std::partition(pool.begin() + item.begin, pool.begin() + item.end,
                                        [&](int row) { return Z(row, best.feature) <= best.threshold; });
        const int split = static_cast<int>(mid - pool.begin());
        if (split == item.begin || split == item.end) {
            make_leaf(item.node); // numeric edge: partition degenerate, refuse the split
            continue;
        }

        tree.nodes[item.node].feature = best.feature;
        tree.nodes[item.node].threshold = best.threshold;
        tree.nodes[item.node].left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[item.node].right = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        stack.push_back({tree.nodes[item.node].right, split, item.end, item.depth + 1});
        stack.push_back({tree.nodes[item.node].left, item.begin, split, item.depth + 1});
    }
    return tree;
}

} // namespace nlistack
