#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "nlistack/error.hpp"
#include "nlistack/linear_svm.hpp"
#include "nlistack/numeric.hpp"
#include "nlistack/rng.hpp"
#include "nlistack/tree.hpp"

using namespace nlistack;

namespace {

SparseVector sparse(int dimension, std::vector<std::pair<int, double>> entries) {
    SparseVector v;
    v.dimension = dimension;
    v.entries = std::move(entries);
    return v;
}

// Two well-separated clusters in 2-D, unit-normalized like real feature rows.
void separable_problem(std::vector<SparseVector>& X, std::vector<std::string>& y) {
    X.clear();
    y.clear();
    const double inv = 1.0 / std::sqrt(1.0 + 0.04);
    for (int i = 0; i < 6; ++i) {
        const double jitter = 0.2 + 0.01 * i;
        X.push_back(sparse(2, {{0, 1.0 * inv}, {1, jitter * inv}}));
        y.push_back("pos");
        X.push_back(sparse(2, {{0, jitter * inv}, {1, 1.0 * inv}}));
        y.push_back("neg");
    }
}

} // namespace

TEST_CASE("linear SVM separates a separable problem and orders labels sorted") {
    std::vector<SparseVector> X;
    std::vector<std::string> y;
    separable_problem(X, y);
    const LinearModel model = train_linear_svm_ovr(X, y, 1.0, 7);
    REQUIRE(model.labels == std::vector<std::string>{"neg", "pos"});
    CHECK(model.class_count() == 2);
    CHECK(model.dimension() == 2);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const int predicted = predict(model, X[i]);
        CHECK(model.labels[predicted] == y[i]);
    }
}

TEST_CASE("linear SVM training is bit-deterministic for a fixed seed") {
    std::vector<SparseVector> X;
    std::vector<std::string> y;
    separable_problem(X, y);
    const LinearModel a = train_linear_svm_ovr(X, y, 0.5, 42);
    const LinearModel b = train_linear_svm_ovr(X, y, 0.5, 42);
    REQUIRE(a.weights.size() == b.weights.size());
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
        CHECK(a.bias[k] == b.bias[k]);
        for (std::size_t j = 0; j < a.weights[k].size(); ++j) {
            CHECK(a.weights[k][j] == b.weights[k][j]);
        }
    }
}

TEST_CASE("SVM probabilities are a softmax over decision values") {
    std::vector<SparseVector> X;
    std::vector<std::string> y;
    separable_problem(X, y);
    const LinearModel model = train_linear_svm_ovr(X, y, 1.0, 3);
    const SparseVector probe = sparse(2, {{0, 0.9}, {1, 0.1}});
    const std::vector<double> scores = decision_values(model, probe);
    const std::vector<double> probs = probabilities(model, probe);
    REQUIRE(probs.size() == scores.size());
    double total = 0.0;
    for (const double p : probs) {
        CHECK(p > 0.0);
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(argmax(probs) == argmax(scores));
    const std::vector<double> expected = softmax(scores);
    for (std::size_t k = 0; k < probs.size(); ++k) {
        CHECK(probs[k] == doctest::Approx(expected[k]).epsilon(1e-12));
    }
}

TEST_CASE("SVM input validation") {
    std::vector<SparseVector> X = {sparse(2, {{0, 1.0}}), sparse(2, {{1, 1.0}})};
    SUBCASE("one-class data is degenerate") {
        CHECK(testing::throws_with_substring<DataError>(
            [&] { train_linear_svm_ovr(X, std::vector<std::string>{"a", "a"}, 1.0, 0); },
            "degenerate"));
    }
    SUBCASE("non-positive C is rejected") {
        CHECK_THROWS_AS(train_linear_svm_ovr(X, std::vector<std::string>{"a", "b"}, 0.0, 0),
                        ConfigError);
        CHECK_THROWS_AS(train_linear_svm_ovr(X, std::vector<std::string>{"a", "b"}, -1.0, 0),
                        ConfigError);
    }
    SUBCASE("dimension mismatch at prediction time is named") {
        const LinearModel model = train_linear_svm_ovr(X, std::vector<std::string>{"a", "b"}, 1.0, 0);
        CHECK(testing::throws_with_substring<ConfigError>(
            [&] { (void)predict(model, sparse(5, {{4, 1.0}})); }, "dimension"));
    }
}

TEST_CASE("decision tree: single-class input collapses to a pure leaf") {
    Eigen::MatrixXd Z(4, 1);
    Z << 0.0, 1.0, 2.0, 3.0;
    const std::vector<int> y = {1, 1, 1, 1};
    const std::vector<double> w(4, 1.0);
    const std::vector<int> idx = {0, 1, 2, 3};
    Rng rng(9);
    const DecisionTree tree = train_decision_tree(Z, y, 2, w, idx, TreeOptions{}, rng);
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].feature == -1);
    const auto& probs = tree.predict_probs(Eigen::VectorXd::Constant(1, 1.5));
    CHECK(probs[0] == doctest::Approx(0.0));
    CHECK(probs[1] == doctest::Approx(1.0));
}

TEST_CASE("decision tree: separable 1-D data yields two pure leaves") {
    Eigen::MatrixXd Z(6, 1);
    Z << 0.0, 0.1, 0.2, 1.0, 1.1, 1.2;
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    const std::vector<double> w(6, 1.0);
    const std::vector<int> idx = {0, 1, 2, 3, 4, 5};
    Rng rng(1);
    const DecisionTree tree = train_decision_tree(Z, y, 2, w, idx, TreeOptions{}, rng);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold > 0.2);
    CHECK(tree.nodes[0].threshold <= 1.0);
    Eigen::VectorXd low = Eigen::VectorXd::Constant(1, 0.05);
    Eigen::VectorXd high = Eigen::VectorXd::Constant(1, 1.05);
    CHECK(tree.predict_probs(low)[0] == doctest::Approx(1.0));
    CHECK(tree.predict_probs(high)[1] == doctest::Approx(1.0));
}

TEST_CASE("decision tree: max_depth=1 builds a stump") {
    // XOR-ish layout needs depth 2; a stump must stop after one split.
    Eigen::MatrixXd Z(4, 2);
    Z << 0.0, 0.0, //
        0.0, 1.0,  //
        1.0, 0.0,  //
        1.0, 1.0;
    const std::vector<int> y = {0, 1, 1, 0};
    const std::vector<double> w(4, 1.0);
    const std::vector<int> idx = {0, 1, 2, 3};
    TreeOptions options;
    options.max_depth = 1;
    Rng rng(5);
    const DecisionTree tree = train_decision_tree(Z, y, 2, w, idx, options, rng);
    for (const TreeNode& node : tree.nodes) {
        if (node.feature >= 0) {
            CHECK(tree.nodes[node.left].feature == -1);
            CHECK(tree.nodes[node.right].feature == -1);
        }
    }
    CHECK(tree.nodes.size() <= 3);
}

TEST_CASE("decision tree: min_leaf forbids splits that isolate fewer samples") {
    Eigen::MatrixXd Z(4, 1);
    Z << 0.0, 1.0, 2.0, 3.0;
    const std::vector<int> y = {0, 1, 1, 1};
    const std::vector<double> w(4, 1.0);
    const std::vector<int> idx = {0, 1, 2, 3};
    TreeOptions options;
    options.min_leaf = 2;
    Rng rng(2);
    const DecisionTree tree = train_decision_tree(Z, y, 2, w, idx, options, rng);
    // The only impurity-reducing split (0 | 1,2,3) would leave one sample on
    // the left, so every realized split must keep >= 2 per side.
    for (const TreeNode& node : tree.nodes) {
        if (node.feature >= 0) {
            CHECK(node.threshold >= 1.0); // split cannot isolate sample 0 alone
        }
    }
}

TEST_CASE("decision tree: instance weights shift leaf distributions") {
    Eigen::MatrixXd Z(2, 1);
    Z << 0.0, 0.0; // identical points: no split possible, one leaf
    const std::vector<int> y = {0, 1};
    const std::vector<double> w = {3.0, 1.0};
    const std::vector<int> idx = {0, 1};
    Rng rng(4);
    const DecisionTree tree = train_decision_tree(Z, y, 2, w, idx, TreeOptions{}, rng);
    REQUIRE(tree.nodes.size() == 1);
    const auto& probs = tree.nodes[0].class_probs;
    CHECK(probs[0] == doctest::Approx(0.75));
    CHECK(probs[1] == doctest::Approx(0.25));
}

TEST_CASE("decision tree input validation") {
    Eigen::MatrixXd Z(1, 1);
    Z << 0.0;
    const std::vector<int> y = {0};
    const std::vector<double> w = {1.0};
    Rng rng(0);
    CHECK_THROWS_AS(train_decision_tree(Z, y, 2, w, {}, TreeOptions{}, rng), DataError);
    TreeOptions bad;
    bad.min_leaf = 0;
    CHECK_THROWS_AS(train_decision_tree(Z, y, 2, w, {0}, bad, rng), ConfigError);
}
