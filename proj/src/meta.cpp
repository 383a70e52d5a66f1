#include "nlistack/meta.hpp"

#include <algorithm>
#include <cmath>

#include "nlistack/error.hpp"
#include "nlistack/linear_svm.hpp"
#include "nlistack/numeric.hpp"
#include "nlistack/rng.hpp"

namespace nlistack {

const char* meta_algorithm_name(MetaAlgorithm algorithm) {
    switch (algorithm) {
        case MetaAlgorithm::linear_svm: return "svm";
        case MetaAlgorithm::logistic_regression: return "logistic";
        case MetaAlgorithm::ridge_regression: return "ridge";
        case MetaAlgorithm::perceptron: return "perceptron";
        case MetaAlgorithm::decision_tree: return "tree";
        case MetaAlgorithm::lda: return "lda";
        case MetaAlgorithm::qda: return "qda";
        case MetaAlgorithm::knn: return "knn";
        case MetaAlgorithm::nearest_centroid: return "centroid";
    }
    return "?";
}

MetaAlgorithm meta_algorithm_from_name(const std::string& name) {
    static const MetaAlgorithm all[] = {
        MetaAlgorithm::linear_svm,   MetaAlgorithm::logistic_regression,
        MetaAlgorithm::ridge_regression, MetaAlgorithm::perceptron,
        MetaAlgorithm::decision_tree,    MetaAlgorithm::lda,
        MetaAlgorithm::qda,              MetaAlgorithm::knn,
        MetaAlgorithm::nearest_centroid};
    for (const MetaAlgorithm a : all)
        if (name == meta_algorithm_name(a)) return a;
    std::string valid;
    for (const MetaAlgorithm a : all) {
        if (!valid.empty()) valid += ", ";
        valid += meta_algorithm_name(a);
    }
    throw ConfigError("unknown meta-learner '" + name + "' (expected one of: " + valid + ")");
}

double MetaLearnerSpec::get(const std::string& key, double fallback) const {
    const auto it = hyper.find(key);
    return it == hyper.end() ? fallback : it->second;
}

namespace {

void validate_hyper(const MetaLearnerSpec& spec) {
    auto allowed = [&]() -> std::vector<std::string> {
        switch (spec.algorithm) {
            case MetaAlgorithm::linear_svm: return {"C"};
            case MetaAlgorithm::logistic_regression: return {"lambda"};
            case MetaAlgorithm::ridge_regression: return {"lambda"};
            case MetaAlgorithm::perceptron: return {};
            case MetaAlgorithm::decision_tree: return {"max_depth", "min_leaf"};
            case MetaAlgorithm::lda: return {"gamma"};
            case MetaAlgorithm::qda: return {"gamma"};
            case MetaAlgorithm::knn: return {"k"};
            case MetaAlgorithm::nearest_centroid: return {};
        }
        return {};
    }();
    for (const auto& [key, value] : spec.hyper) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(std::string("hyperparameter '") + key + "' is not valid for " +
                              meta_algorithm_name(spec.algorithm));
        (void)value;
    }
}

void validate_training_input(const Eigen::MatrixXd& Z, const std::vector<int>& y, int K) {
    if (K < 2) throw ConfigError("meta training needs at least 2 classes");
    if (Z.rows() != static_cast<Eigen::Index>(y.size()))
        throw ConfigError("meta training: row/label count mismatch");
    if (Z.rows() < K)
        throw DataError("meta training needs at least as many instances as classes (n=" +
                        std::to_string(Z.rows()) + ", K=" + std::to_string(K) + ")");
    if (Z.cols() < 1) throw ConfigError("meta training: empty feature dimension");
    if (!Z.allFinite()) throw NumericError("non-finite value in meta-feature matrix");
    for (const int yi : y)
        if (yi < 0 || yi >= K) throw ConfigError("label index out of range in meta training");
}

std::vector<int> class_counts(const std::vector<int>& y, int K) {
    std::vector<int> counts(K, 0);
    for (const int yi : y) ++counts[yi];
    return counts;
}

void require_all_classes(const std::vector<int>& counts, const char* algorithm) {
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] == 0)
            throw DataError(std::string(algorithm) + " training data is missing class index " +
                            std::to_string(k));
}

Eigen::MatrixXd class_means(const Eigen::MatrixXd& Z, const std::vector<int>& y, int K,
                            const std::vector<int>& counts) {
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(K, Z.cols());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) means.row(y[i]) += Z.row(i);
    for (int k = 0; k < K; ++k) means.row(k) /= static_cast<double>(counts[k]);
    return means;
}

void train_logistic(MetaModel& model, const Eigen::MatrixXd& Z, const std::vector<int>& y,
                    double lambda) {
    const int K = model.class_count;
    const Eigen::Index d = Z.cols();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(K, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd gW(K, d), trial_gW(K, d);
    Eigen::VectorXd gb(K), trial_gb(K);

    double loss = logistic_loss_grad(W, b, Z, y, lambda, gW, gb);
    constexpr int kMaxIters = 500;
    constexpr double kGradTol = 1e-8;
    for (int iter = 0; iter < kMaxIters; ++iter) {
        const double grad_sq = gW.squaredNorm() + gb.squaredNorm();
        if (std::sqrt(grad_sq) < kGradTol) break;

        // Backtracking line search along the steepest descent direction.
        double step = 1.0;
        while (true) {
            const Eigen::MatrixXd W_try = W - step * gW;
            const Eigen::VectorXd b_try = b - step * gb;
            const double trial = logistic_loss_grad(W_try, b_try, Z, y, lambda, trial_gW, trial_gb);
            if (trial <= loss - 0.5 * step * grad_sq || step < 1e-12) {
                W = W_try;
                b = b_try;
                loss = trial;
                gW = trial_gW;
                gb = trial_gb;
                break;
            }
            step *= 0.5;
        }
    }
    model.W = std::move(W);
    model.b = std::move(b);
}

void train_ridge(MetaModel& model, const Eigen::MatrixXd& Z, const std::vector<int>& y,
                 double lambda) {
    const int K = model.class_count;
    const Eigen::Index n = Z.rows();
    const Eigen::Index d = Z.cols();

    // Augmented design [Z 1]; one regularized least-squares problem per
    // class with +-1 targets, all sharing the same Gram factorization.
    Eigen::MatrixXd A(n, d + 1);
    A.leftCols(d) = Z;
    A.col(d).setOnes();
    Eigen::MatrixXd G = A.transpose() * A;
    G.diagonal().array() += lambda;
    const Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
        throw NumericError("ridge regression normal equations are not positive definite");

    model.W.resize(K, d);
    model.b.resize(K);
    Eigen::VectorXd t(n);
    for (int k = 0; k < K; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) t[i] = y[i] == k ? 1.0 : -1.0;
        const Eigen::VectorXd w = llt.solve(A.transpose() * t);
        model.W.row(k) = w.head(d).transpose();
        model.b[k] = w[d];
    }
}

void train_perceptron(MetaModel& model, const Eigen::MatrixXd& Z, const std::vector<int>& y,
                      std::uint64_t seed) {
    const int K = model.class_count;
    model.W = Eigen::MatrixXd::Zero(K, Z.cols());
    model.b = Eigen::VectorXd::Zero(K);
    std::vector<std::size_t> order(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    Rng rng(seed);
    constexpr int kMaxEpochs = 100;
    for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
        rng.shuffle(order);
        bool clean = true;
        for (const std::size_t i : order) {
            Eigen::VectorXd scores = model.W * Z.row(i).transpose() + model.b;
            Eigen::Index guess;
            scores.maxCoeff(&guess);
            if (static_cast<int>(guess) != y[i]) {
                // Fixed learning rate 1: promote the truth, demote the guess.
                model.W.row(y[i]) += Z.row(i);
                model.b[y[i]] += 1.0;
                model.W.row(guess) -= Z.row(i);
                model.b[guess] -= 1.0;
                clean = false;
            }
        }
        if (clean) break; // converged: separable data reached zero training error
    }
}

void train_lda(MetaModel& model, const Eigen::MatrixXd& Z, const std::vector<int>& y,
               const std::vector<int>& counts, double gamma) {
    const int K = model.class_count;
    const Eigen::Index n = Z.rows();
    const Eigen::Index d = Z.cols();
    require_all_classes(counts, "LDA");
    model.means = class_means(Z, y, K, counts);
    model.log_priors.resize(K);
    for (int k = 0; k < K; ++k)
        model.log_priors[k] = std::log(static_cast<double>(counts[k]) / static_cast<double>(n));

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd c = (Z.row(i) - model.means.row(y[i])).transpose();
        scatter.noalias() += c * c.transpose();
    }
    Eigen::MatrixXd cov = scatter / static_cast<double>(std::max<Eigen::Index>(n - K, 1));
    cov.diagonal().array() += gamma;

    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("LDA pooled covariance is singular even after shrinkage");
    model.lda_inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
}

void train_qda(MetaModel& model, const Eigen::MatrixXd& Z, const std::vector<int>& y,
               const std::vector<int>& counts, double gamma) {
    const int K = model.class_count;
    const Eigen::Index n = Z.rows();
    const Eigen::Index d = Z.cols();
    require_all_classes(counts, "QDA");
    model.means = class_means(Z, y, K, counts);
    model.log_priors.resize(K);
    model.qda_inv.resize(K);
    model.qda_logdet.resize(K);
    for (int k = 0; k < K; ++k) {
        model.log_priors[k] = std::log(static_cast<double>(counts[k]) / static_cast<double>(n));
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (y[i] != k) continue;
            const Eigen::VectorXd c = (Z.row(i) - model.means.row(k)).transpose();
            scatter.noalias() += c * c.transpose();
        }
        Eigen::MatrixXd cov = scatter / static_cast<double>(std::max(counts[k] - 1, 1));
        cov.diagonal().array() += gamma;
        const Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw NumericError("QDA covariance is singular after shrinkage for class index " +
                               std::to_string(k));
        double logdet = 0.0;
        const Eigen::MatrixXd L = llt.matrixL();
        for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(L(i, i));
        model.qda_logdet[k] = logdet;
        model.qda_inv[k] = llt.solve(Eigen::MatrixXd::Identity(d, d));
    }
}

void train_dense_svm(MetaModel& model, const Eigen::MatrixXd& Z, const std::vector<int>& y,
                     double C, std::uint64_t seed) {
    const int K = model.class_count;
    std::vector<SparseVector> X(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        X[i].dimension = static_cast<int>(Z.cols());
        for (Eigen::Index j = 0; j < Z.cols(); ++j)
            if (Z(i, j) != 0.0) X[i].entries.emplace_back(static_cast<int>(j), Z(i, j));
    }
    std::vector<std::string> label_names(K);
    for (int k = 0; k < K; ++k) label_names[k] = std::to_string(k);
    const LinearModel linear = train_linear_svm_ovr(X, y, label_names, C, seed);
    model.W.resize(K, Z.cols());
    model.b.resize(K);
    for (int k = 0; k < K; ++k) {
        for (Eigen::Index j = 0; j < Z.cols(); ++j) model.W(k, j) = linear.weights[k][j];
        model.b[k] = linear.bias[k];
    }
}

} // namespace

double logistic_loss_grad(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                          const Eigen::MatrixXd& Z, const std::vector<int>& y, double lambda,
                          Eigen::MatrixXd& grad_W, Eigen::VectorXd& grad_b) {
    const Eigen::Index n = Z.rows();
    const int K = static_cast<int>(W.rows());

    Eigen::MatrixXd scores = Z * W.transpose();          // n x K
    scores.rowwise() += b.transpose();
    const Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
    scores.colwise() -= row_max;
    Eigen::MatrixXd P = scores.array().exp().matrix();
    const Eigen::VectorXd row_sum = P.rowwise().sum();
    P.array().colwise() /= row_sum.array();

    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        loss -= scores(i, y[i]) - std::log(row_sum[i]);
    loss /= static_cast<double>(n);
    loss += 0.5 * lambda * W.squaredNorm();

    Eigen::MatrixXd R = P; // residual P - onehot(y)
    for (Eigen::Index i = 0; i < n; ++i) R(i, y[i]) -= 1.0;
    grad_W = (R.transpose() * Z) / static_cast<double>(n) + lambda * W;
    grad_b = R.colwise().sum().transpose() / static_cast<double>(n);
    (void)K;
    return loss;
}

MetaModel train_meta(const MetaLearnerSpec& spec, const Eigen::MatrixXd& Z,
                     const std::vector<int>& y, int class_count, std::uint64_t seed) {
    validate_hyper(spec);
    validate_training_input(Z, y, class_count);

    MetaModel model;
    model.algorithm = spec.algorithm;
    model.class_count = class_count;
    model.dim = static_cast<int>(Z.cols());
    const std::vector<int> counts = class_counts(y, class_count);

    switch (spec.algorithm) {
        case MetaAlgorithm::linear_svm:
            train_dense_svm(model, Z, y, spec.get("C", 1.0), seed);
            break;
        case MetaAlgorithm::logistic_regression:
            train_logistic(model, Z, y, spec.get("lambda", 1e-4));
            break;
        case MetaAlgorithm::ridge_regression:
            train_ridge(model, Z, y, spec.get("lambda", 1.0));
            break;
        case MetaAlgorithm::perceptron:
            train_perceptron(model, Z, y, seed);
            break;
        case MetaAlgorithm::decision_tree: {
            TreeOptions options;
            options.max_depth = static_cast<int>(spec.get("max_depth", 0));
            options.min_leaf = static_cast<int>(spec.get("min_leaf", 1));
            std::vector<double> weights(y.size(), 1.0);
            std::vector<int> indices(y.size());
            for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
            Rng rng(seed);
            model.tree = train_decision_tree(Z, y, class_count, weights, indices, options, rng);
            break;
        }
        case MetaAlgorithm::lda:
            train_lda(model, Z, y, counts, spec.get("gamma", 1e-3));
            break;
        case MetaAlgorithm::qda:
            train_qda(model, Z, y, counts, spec.get("gamma", 1e-3));
            break;
        case MetaAlgorithm::knn: {
            require_all_classes(counts, "kNN");
            model.train_Z = Z;
            model.train_y = y;
            const int k = static_cast<int>(spec.get("k", 5.0));
            if (k < 1) throw ConfigError("kNN requires k >= 1");
            // Clamp: asking for more neighbours than instances means "use all".
            model.knn_k = std::min<int>(k, static_cast<int>(Z.rows()));
            break;
        }
        case MetaAlgorithm::nearest_centroid:
            require_all_classes(counts, "nearest centroid");
            model.means = class_means(Z, y, class_count, counts);
            break;
    }
    return model;
}

MetaPrediction predict_meta(const MetaModel& model, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (static_cast<int>(z.size()) != model.dim)
        throw ConfigError("meta prediction: input dimension " + std::to_string(z.size()) +
                          " does not match model dimension " + std::to_string(model.dim));
    const int K = model.class_count;
    std::vector<double> probs(K);

    switch (model.algorithm) {
        case MetaAlgorithm::linear_svm:
        case MetaAlgorithm::logistic_regression:
        case MetaAlgorithm::ridge_regression:
        case MetaAlgorithm::perceptron: {
            const Eigen::VectorXd scores = model.W * z + model.b;
            std::vector<double> s(scores.data(), scores.data() + K);
            probs = softmax(s);
            break;
        }
        case MetaAlgorithm::decision_tree:
            probs = model.tree.predict_probs(z);
            break;
        case MetaAlgorithm::lda: {
            std::vector<double> disc(K);
            const Eigen::VectorXd a = model.lda_inv * z;
            for (int k = 0; k < K; ++k) {
                const Eigen::VectorXd mu = model.means.row(k).transpose();
                disc[k] = mu.dot(a) - 0.5 * mu.dot(model.lda_inv * mu) + model.log_priors[k];
            }
            probs = softmax(disc);
            break;
        }
        case MetaAlgorithm::qda: {
            std::vector<double> disc(K);
            for (int k = 0; k < K; ++k) {
                const Eigen::VectorXd c = z - model.means.row(k).transpose();
                disc[k] = -0.5 * model.qda_logdet[k] - 0.5 * c.dot(model.qda_inv[k] * c) +
                          model.log_priors[k];
            }
            probs = softmax(disc);
            break;
        }
        case MetaAlgorithm::knn: {
            const Eigen::Index n = model.train_Z.rows();
            std::vector<std::pair<double, int>> dist(n); // (squared distance, train index)
            for (Eigen::Index i = 0; i < n; ++i)
                dist[i] = {(model.train_Z.row(i).transpose() - z).squaredNorm(),
                           static_cast<int>(i)};
            const int k = std::min<int>(model.knn_k, static_cast<int>(n));
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            std::fill(probs.begin(), probs.end(), 0.0);
            for (int i = 0; i < k; ++i) probs[model.train_y[dist[i].second]] += 1.0;
            for (double& p : probs) p /= static_cast<double>(k);
            break;
        }
        case MetaAlgorithm::nearest_centroid: {
            std::vector<double> neg_dist(K);
            for (int k = 0; k < K; ++k)
                neg_dist[k] = -(model.means.row(k).transpose() - z).norm();
            probs = softmax(neg_dist);
            break;
        }
    }

    MetaPrediction p;
    p.label_index = static_cast<int>(argmax(probs));
    p.probabilities = std::move(probs);
    return p;
}

} // namespace nlistack
