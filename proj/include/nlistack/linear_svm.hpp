#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlistack/features.hpp"

namespace nlistack {

// One-vs-rest linear classifier: K weight rows plus biases, with class
// probabilities obtained by a softmax over the decision values (which
// preserves the argmax by construction).
struct LinearModel {
    std::vector<std::vector<double>> weights; // K x D
    std::vector<double> bias;                 // K
    std::vector<std::string> labels;          // ordered class names

    int class_count() const { return static_cast<int>(labels.size()); }
    int dimension() const { return weights.empty() ? 0 : static_cast<int>(weights[0].size()); }
};

// Trains K binary L2-regularized hinge-loss problems (class vs. rest) by
// dual coordinate descent with the bias folded in as an augmented constant
// feature.  Each binary problem stops when the relative change of its dual
// objective over one epoch falls below 1e-6, or after 200 epochs.
// Deterministic: subproblem k draws its coordinate order from
// mix_seed(seed, k), so training classes concurrently or in any order gives
// bit-identical models.
LinearModel train_linear_svm_ovr(const std::vector<SparseVector>& X,
                                 const std::vector<std::string>& y, double C = 1.0,
                                 std::uint64_t seed = 0);

// Same, for callers that already hold label indices into an explicit label
// order (the order defines the model's row order).
LinearModel train_linear_svm_ovr(const std::vector<SparseVector>& X, const std::vector<int>& y,
                                 const std::vector<std::string>& labels, double C,
                                 std::uint64_t seed);

// w_k . x + b_k per class.
std::vector<double> decision_values(const LinearModel& model, const SparseVector& x);

// Softmax over decision values.
std::vector<double> probabilities(const LinearModel& model, const SparseVector& x);

// Index of the predicted class (argmax of decision values).
int predict(const LinearModel& model, const SparseVector& x);

} // namespace nlistack
