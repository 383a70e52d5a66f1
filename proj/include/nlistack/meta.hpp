#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlistack/tree.hpp"

namespace nlistack {

enum class MetaAlgorithm {
    linear_svm,
    logistic_regression,
    ridge_regression,
    perceptron,
    decision_tree,
    lda,
    qda,
    knn,
    nearest_centroid,
};

const char* meta_algorithm_name(MetaAlgorithm algorithm);
MetaAlgorithm meta_algorithm_from_name(const std::string& name);

// Algorithm choice plus hyperparameters.  Recognized keys (others are
// rejected): C (svm, default 1), lambda (logistic 1e-4, ridge 1.0),
// gamma (lda/qda covariance shrinkage, 1e-3), k (knn, 5),
// max_depth (tree, 0 = unlimited), min_leaf (tree, 1).
struct MetaLearnerSpec {
    MetaAlgorithm algorithm = MetaAlgorithm::lda;
    std::map<std::string, double> hyper;

    double get(const std::string& key, double fallback) const;
};

// A fitted meta-learner over dense feature rows.  One struct covers all
// algorithms; only the fields of the trained algorithm are populated.
struct MetaModel {
    MetaAlgorithm algorithm = MetaAlgorithm::lda;
    int class_count = 0;
    int dim = 0;

    // Linear family (svm / logistic / ridge / perceptron): scores = W z + b.
    Eigen::MatrixXd W; // K x d
    Eigen::VectorXd b; // K

    // Gaussian family (lda / qda) and nearest centroid.
    Eigen::MatrixXd means;      // K x d class means / centroids
    Eigen::VectorXd log_priors; // K
    Eigen::MatrixXd lda_inv;    // d x d inverse pooled covariance
    std::vector<Eigen::MatrixXd> qda_inv;
    Eigen::VectorXd qda_logdet;

    // kNN memory.
    Eigen::MatrixXd train_Z;
    std::vector<int> train_y;
    int knn_k = 5;

    DecisionTree tree;
};

// Trains a meta-learner on Z (n x d) with label indices y in [0, K).
// Requires n >= K.  LDA/QDA/centroid additionally require every class to
// appear in y.  Deterministic given (data, spec, seed).
MetaModel train_meta(const MetaLearnerSpec& spec, const Eigen::MatrixXd& Z,
                     const std::vector<int>& y, int class_count, std::uint64_t seed);

struct MetaPrediction {
    int label_index = 0;
    std::vector<double> probabilities; // sums to 1
};

// Predicted label (argmax of the probability vector) plus per-class
// probabilities: native posteriors for logistic/LDA/QDA, softmax over
// scores for the linear family, leaf frequencies for trees, vote fractions
// for kNN, softmax over negative distances for nearest centroid.
MetaPrediction predict_meta(const MetaModel& model, const Eigen::Ref<const Eigen::VectorXd>& z);

// Multinomial logistic loss and gradient at (W, b): mean cross-entropy plus
// 0.5*lambda*||W||^2 (bias unregularized).  Public so gradient correctness
// is testable against finite differences.
double logistic_loss_grad(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                          const Eigen::MatrixXd& Z, const std::vector<int>& y, double lambda,
                          Eigen::MatrixXd& grad_W, Eigen::VectorXd& grad_b);

} // namespace nlistack
