#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nlistack/rng.hpp"

namespace nlistack {

// CART-style classification tree over dense inputs.  Supports the knobs the
// ensemble layer needs: instance weights (AdaBoost), per-split feature
// subsets (random forest) and random split thresholds (extra trees).

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> class_probs; // leaves: weighted class frequencies
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // node 0 is the root
    int class_count = 0;

    const std::vector<double>& predict_probs(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

struct TreeOptions {
    int max_depth = 0;              // 0 = unlimited
    int min_leaf = 1;               // minimum samples per child
    int feature_subset = 0;         // candidate features per split; 0 = all
    bool random_thresholds = false; // extra-trees: one uniform threshold per candidate
};

// Greedy Gini-impurity tree on Z(indices).  Splits test "value <= threshold";
// exhaustive mode uses midpoints between consecutive distinct values.
// Deterministic given (data, options, rng seed).
DecisionTree train_decision_tree(const Eigen::MatrixXd& Z, const std::vector<int>& y, int class_count,
                                 const std::vector<double>& weights,
                                 const std::vector<int>& indices, const TreeOptions& options,
                                 Rng& rng);

} // namespace nlistack
