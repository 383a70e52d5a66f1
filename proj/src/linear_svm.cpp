#include "nlistack/linear_svm.hpp"

#include <algorithm>
#include <cmath>

#include "nlistack/error.hpp"
#include "nlistack/numeric.hpp"
#include "nlistack/rng.hpp"

namespace nlistack {

namespace {

constexpr double kDualTolerance = 1e-6;
constexpr int kMaxEpochs = 200;

// Solves one binary subproblem
//   min_w  0.5 ||w||^2 + C * sum_i max(0, 1 - y_i * w . xhat_i)
// in the dual by coordinate descent, where xhat is x with an appended
// constant-1 component that supplies the bias.  Writes the weight vector
// (dimension d) and bias for the class.
void solve_binary(const std::vector<SparseVector>& X, const std::vector<signed char>& y, double C,
                  int d, Rng rng, std::vector<double>& w_out, double& bias_out) {
    const std::size_t n = X.size();
    std::vector<double> w(static_cast<std::size_t>(d) + 1, 0.0); // last slot = bias weight
    std::vector<double> alpha(n, 0.0);
    std::vector<double> q_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 1.0; // the augmented bias component
        for (const auto& [idx, val] : X[i].entries) sq += val * val;
        q_diag[i] = sq;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    double prev_objective = 0.0; // f(0) = 0
    double alpha_sum = 0.0;
    for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
        rng.shuffle(order);
        for (const std::size_t i : order) {
            double margin = w[d];
            for (const auto& [idx, val] : X[i].entries) margin += w[idx] * val;
            const double grad = static_cast<double>(y[i]) * margin - 1.0;

            // Projected-gradient skip: coordinate already optimal at its bound.
            if ((alpha[i] <= 0.0 && grad >= 0.0) || (alpha[i] >= C && grad <= 0.0)) continue;

            const double next = std::clamp(alpha[i] - grad / q_diag[i], 0.0, C);
            const double delta = (next - alpha[i]) * static_cast<double>(y[i]);
            if (delta == 0.0) continue;
            alpha_sum += next - alpha[i];
            alpha[i] = next;
            w[d] += delta;
            for (const auto& [idx, val] : X[i].entries) w[idx] += delta * val;
        }

        double w_sq = 0.0;
        for (const double v : w) w_sq += v * v;
        const double objective = 0.5 * w_sq - alpha_sum;
        if (epoch > 0 &&
            std::abs(objective - prev_objective) < kDualTolerance * std::max(1.0, std::abs(objective)))
            break;
        prev_objective = objective;
    }

    bias_out = w[d];
    w.pop_back();
    w_out = std::move(w);
}

void validate_input(const std::vector<SparseVector>& X, std::size_t n_labels, double C) {
    if (C <= 0.0) throw ConfigError("SVM cost C must be positive");
    if (X.size() != n_labels) throw ConfigError("feature/label count mismatch in SVM training");
    if (X.empty()) throw DataError("SVM training set is empty");
    const int d = X[0].dimension;
    for (const auto& x : X) {
        if (x.dimension != d) throw ConfigError("inconsistent feature dimensions in SVM training");
        for (const auto& [idx, val] : x.entries) {
            if (!std::isfinite(val))
                throw NumericError("non-finite feature value in SVM training input");
        }
    }
}

} // namespace

LinearModel train_linear_svm_ovr(const std::vector<SparseVector>& X, const std::vector<int>& y,
                                 const std::vector<std::string>& labels, double C,
                                 std::uint64_t seed) {
    validate_input(X, y.size(), C);
    const int K = static_cast<int>(labels.size());
    int distinct = 0;
    {
        std::vector<bool> seen(K, false);
        for (const int yi : y) {
            if (yi < 0 || yi >= K) throw ConfigError("label index out of range in SVM training");
            if (!seen[yi]) {
                seen[yi] = true;
                ++distinct;
            }
        }
    }
    if (distinct < 2)
        throw DataError("SVM training data is degenerate: only one class present");

    LinearModel model;
    model.labels = labels;
    model.weights.resize(K);
    model.bias.resize(K);
    const int d = X[0].dimension;
    std::vector<signed char> target(y.size());
    for (int k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i] == k ? 1 : -1;
        solve_binary(X, target, C, d, Rng(mix_seed(seed, static_cast<std::uint64_t>(k))),
                     model.weights[k], model.bias[k]);
    }
    return model;
}

LinearModel train_linear_svm_ovr(const std::vector<SparseVector>& X,
                                 const std::vector<std::string>& y, double C, std::uint64_t seed) {
    std::vector<std::string> labels = y;
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::vector<int> idx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        idx[i] = static_cast<int>(
            std::lower_bound(labels.begin(), labels.end(), y[i]) - labels.begin());
    return train_linear_svm_ovr(X, idx, labels, C, seed);
}

std::vector<double> decision_values(const LinearModel& model, const SparseVector& x) {
    if (x.dimension != model.dimension())
        throw ConfigError("feature dimension " + std::to_string(x.dimension) +
                          " does not match model dimension " + std::to_string(model.dimension()));
    std::vector<double> values(model.class_count());
    for (int k = 0; k < model.class_count(); ++k) {
        double v = model.bias[k];
        const auto& w = model.weights[k];
        for (const auto& [idx, val] : x.entries) v += w[idx] * val;
        values[k] = v;
    }
    return values;
}

std::vector<double> probabilities(const LinearModel& model, const SparseVector& x) {
    return softmax(decision_values(model, x));
}

int predict(const LinearModel& model, const SparseVector& x) {
    return static_cast<int>(argmax(decision_values(model, x)));
}

} // namespace nlistack
