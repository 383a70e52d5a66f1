#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "nlistack/corpus.hpp"
#include "nlistack/error.hpp"
#include "nlistack/rng.hpp"
#include "nlistack/stacking.hpp"

using namespace nlistack;

namespace {

std::vector<BaseClassifierSpec> two_bases() {
    std::vector<BaseClassifierSpec> specs(2);
    specs[0].feature.type = FeatureType::word_ngram;
    specs[0].feature.n = 1;
    specs[1].feature.type = FeatureType::char_ngram;
    specs[1].feature.n = 2;
    return specs;
}

void cluster_problem(Eigen::MatrixXd& Z, std::vector<int>& y, int class_count) {
    const double centers[3][2] = {{4.0, 0.0}, {0.0, 4.0}, {-4.0, -4.0}};
    const int n = 12 * class_count;
    Z.resize(n, 2);
    y.assign(n, 0);
    Rng rng(55);
    for (int i = 0; i < n; ++i) {
        const int c = i % class_count;
        y[i] = c;
        Z(i, 0) = centers[c][0] + (rng.uniform_real01() - 0.5);
        Z(i, 1) = centers[c][1] + (rng.uniform_real01() - 0.5);
    }
}

} // namespace

TEST_CASE("discrete encoding is a T-block one-hot") {
    const std::vector<double> row = encode_discrete(std::vector<int>{2, 0}, 3);
    CHECK(row == std::vector<double>{0.0, 0.0, 1.0, 1.0, 0.0, 0.0});

    const std::vector<double> named = encode_discrete(std::vector<std::string>{"b", "a"},
                                                      std::vector<std::string>{"a", "b", "c"});
    CHECK(named == std::vector<double>{0.0, 1.0, 0.0, 1.0, 0.0, 0.0});

    CHECK_THROWS_AS(encode_discrete(std::vector<int>{3}, 3), DataError);
    CHECK(testing::throws_with_substring<DataError>(
        [] {
            encode_discrete(std::vector<std::string>{"zz"}, std::vector<std::string>{"a", "b"});
        },
        "zz"));
}

TEST_CASE("continuous encoding concatenates the probability rows") {
    DecisionProfile profile;
    profile.labels = {"a", "b"};
    profile.rows = {{0.25, 0.75}, {0.9, 0.1}};
    const std::vector<double> row = encode_continuous(profile);
    CHECK(row == std::vector<double>{0.25, 0.75, 0.9, 0.1});
}

TEST_CASE("meta-feature rows are strictly out-of-fold and follow dataset order") {
    const Dataset dataset = testing::make_skewed_dataset(3, 15, 91);
    const FoldAssignment folds = stratified_folds(dataset, 3, 17);
    MetaFeatureTrace trace;
    const MetaFeatureMatrix features = generate_meta_features_cv(
        two_bases(), dataset, folds, Encoding::continuous, 23, 1, &trace);

    REQUIRE(features.Z.rows() == static_cast<Eigen::Index>(dataset.documents.size()));
    CHECK(features.Z.cols() == 2 * 3); // T=2 bases, K=3 labels
    REQUIRE(features.doc_ids.size() == dataset.documents.size());
    REQUIRE(trace.row_fold.size() == dataset.documents.size());
    REQUIRE(trace.fold_train_ids.size() == 3);

    for (std::size_t i = 0; i < dataset.documents.size(); ++i) {
        const Document& doc = dataset.documents[i];
        CHECK(features.doc_ids[i] == doc.id); // dataset order
        CHECK(features.truth[i] == dataset.label_index(doc.label));
        const int fold = trace.row_fold[i];
        CHECK(fold == folds.fold_of(doc.id));
        const auto& train_ids = trace.fold_train_ids[fold];
        // The document that produced this row never trained its fold's bases.
        CHECK(std::find(train_ids.begin(), train_ids.end(), doc.id) == train_ids.end());
    }
    // Each fold's training set is exactly the complement of its test fold.
    for (int f = 0; f < 3; ++f) {
        std::set<std::string> expected;
        for (const Document& doc : dataset.documents)
            if (folds.fold_of(doc.id) != f) expected.insert(doc.id);
        const std::set<std::string> actual(trace.fold_train_ids[f].begin(),
                                           trace.fold_train_ids[f].end());
        CHECK(actual == expected);
    }
}

TEST_CASE("encodings shape the meta-feature values as documented") {
    const Dataset dataset = testing::make_skewed_dataset(3, 9, 5);
    const FoldAssignment folds = stratified_folds(dataset, 3, 2);
    const MetaFeatureMatrix discrete = generate_meta_features_cv(
        two_bases(), dataset, folds, Encoding::discrete_onehot, 7, 1, nullptr);
    for (Eigen::Index i = 0; i < discrete.Z.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < discrete.Z.cols(); ++j) {
            const double v = discrete.Z(i, j);
            CHECK((v == 0.0 || v == 1.0));
            sum += v;
        }
        CHECK(sum == doctest::Approx(2.0)); // exactly T ones
    }
    const MetaFeatureMatrix continuous = generate_meta_features_cv(
        two_bases(), dataset, folds, Encoding::continuous, 7, 1, nullptr);
    for (Eigen::Index i = 0; i < continuous.Z.rows(); ++i) {
        for (int t = 0; t < 2; ++t) {
            double block = 0.0;
            for (int k = 0; k < 3; ++k) block += continuous.Z(i, 3 * t + k);
            CHECK(block == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("meta-feature generation is identical across jobs") {
    const Dataset dataset = testing::make_skewed_dataset(3, 9, 31);
    const FoldAssignment folds = stratified_folds(dataset, 3, 4);
    const MetaFeatureMatrix a = generate_meta_features_cv(two_bases(), dataset, folds,
                                                          Encoding::continuous, 13, 1, nullptr);
    const MetaFeatureMatrix b = generate_meta_features_cv(two_bases(), dataset, folds,
                                                          Encoding::continuous, 13, 3, nullptr);
    REQUIRE(a.Z.rows() == b.Z.rows());
    REQUIRE(a.Z.cols() == b.Z.cols());
    CHECK((a.Z - b.Z).lpNorm<Eigen::Infinity>() == 0.0); // bit-identical
}

TEST_CASE("meta-feature CSV export carries base:label headers plus truth") {
    MetaFeatureMatrix features;
    features.base_names = {"word_1"};
    features.labels = {"a", "b"};
    features.truth = {1};
    features.doc_ids = {"d1"};
    features.Z.resize(1, 2);
    features.Z << 0.25, 0.75;
    std::ostringstream out;
    export_meta_features(features, out);
    CHECK(out.str() == "word_1:a,word_1:b,truth\n0.25,0.75,b\n");
}

TEST_CASE("validate_base_specs rejects features the dataset cannot provide") {
    const Dataset dataset = testing::make_skewed_dataset(2, 6, 3); // plain: no lemma/POS
    std::vector<BaseClassifierSpec> lemma_spec(1);
    lemma_spec[0].feature.type = FeatureType::lemma_ngram;
    lemma_spec[0].feature.n = 1;
    CHECK(testing::throws_with_substring<DataError>(
        [&] { validate_base_specs(lemma_spec, dataset); }, "lemma_1"));

    std::vector<BaseClassifierSpec> pos_spec(1);
    pos_spec[0].feature.type = FeatureType::pos_ngram;
    pos_spec[0].feature.n = 2;
    CHECK_THROWS_AS(validate_base_specs(pos_spec, dataset), DataError);

    std::vector<BaseClassifierSpec> fw_spec(1);
    fw_spec[0].feature.type = FeatureType::funcword_ngram;
    fw_spec[0].feature.n = 1; // no function-word list attached
    CHECK_THROWS_AS(validate_base_specs(fw_spec, dataset), ConfigError);

    CHECK_NOTHROW(validate_base_specs(two_bases(), dataset));
}

TEST_CASE("bagging without bootstrap reduces to the single meta-learner") {
    Eigen::MatrixXd Z;
    std::vector<int> y;
    cluster_problem(Z, y, 3);
    MetaLearnerSpec spec; // LDA: deterministic, seed-independent
    BaggingOptions options;
    options.bootstrap = false;
    const MetaLayer bagged = train_bagged_meta(spec, Z, y, 3, 5, 42, options);
    REQUIRE(bagged.members.size() == 5);
    const MetaModel single = train_meta(spec, Z, y, 3, 0);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const MetaPrediction ensemble = predict_meta_layer(bagged, Z.row(i).transpose());
        const MetaPrediction direct = predict_meta(single, Z.row(i).transpose());
        CHECK(ensemble.label_index == direct.label_index);
        REQUIRE(ensemble.probabilities.size() == direct.probabilities.size());
        for (std::size_t k = 0; k < direct.probabilities.size(); ++k) {
            CHECK(ensemble.probabilities[k] ==
                  doctest::Approx(direct.probabilities[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("bootstrap bagging trains on resamples and stays deterministic") {
    Eigen::MatrixXd Z;
    std::vector<int> y;
    cluster_problem(Z, y, 3);
    MetaLearnerSpec spec;
    const MetaLayer a = train_bagged_meta(spec, Z, y, 3, 7, 9);
    const MetaLayer b = train_bagged_meta(spec, Z, y, 3, 7, 9);
    REQUIRE(a.members.size() == 7);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const MetaPrediction pa = predict_meta_layer(a, Z.row(i).transpose());
        const MetaPrediction pb = predict_meta_layer(b, Z.row(i).transpose());
        CHECK(pa.label_index == pb.label_index);
        for (std::size_t k = 0; k < pa.probabilities.size(); ++k) {
            CHECK(pa.probabilities[k] == pb.probabilities[k]);
        }
    }
}

TEST_CASE("tree meta-ensembles fit separable clusters") {
    Eigen::MatrixXd Z;
    std::vector<int> y;
    cluster_problem(Z, y, 3);
    for (const MetaEnsembleKind kind :
         {MetaEnsembleKind::random_forest, MetaEnsembleKind::extra_trees}) {
        const MetaLayer layer = train_tree_meta_ensemble(kind, Z, y, 3, 30, 77);
        REQUIRE(layer.trees.size() == 30);
        int hits = 0;
        for (Eigen::Index i = 0; i < Z.rows(); ++i) {
            if (predict_meta_layer(layer, Z.row(i).transpose()).label_index == y[i]) ++hits;
        }
        CHECK(static_cast<double>(hits) / static_cast<double>(Z.rows()) >= 0.95);
    }
}

TEST_CASE("adaboost stumps boost a separable two-class problem to zero error") {
    Eigen::MatrixXd Z;
    std::vector<int> y;
    cluster_problem(Z, y, 2);
    const MetaLayer layer = train_tree_meta_ensemble(MetaEnsembleKind::adaboost, Z, y, 2, 10, 3);
    CHECK(layer.alphas.size() == layer.trees.size());
    int hits = 0;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        if (predict_meta_layer(layer, Z.row(i).transpose()).label_index == y[i]) ++hits;
    }
    CHECK(hits == static_cast<int>(Z.rows()));
}

TEST_CASE("tree ensembles validate their kind and estimator count") {
    Eigen::MatrixXd Z(4, 1);
    Z << 0.0, 1.0, 2.0, 3.0;
    const std::vector<int> y = {0, 0, 1, 1};
    CHECK_THROWS_AS(train_tree_meta_ensemble(MetaEnsembleKind::single, Z, y, 2, 5, 0),
                    ConfigError);
    CHECK_THROWS_AS(train_tree_meta_ensemble(MetaEnsembleKind::random_forest, Z, y, 2, 0, 0),
                    ConfigError);
    CHECK_THROWS_AS(train_bagged_meta(MetaLearnerSpec{}, Z, y, 2, 0, 0), ConfigError);
}

TEST_CASE("a stacked model predicts through bases plus meta layer") {
    const Dataset dataset = testing::make_skewed_dataset(3, 12, 77);
    const FoldAssignment folds = stratified_folds(dataset, 3, 19);
    MetaLearnerSpec spec;
    spec.algorithm = MetaAlgorithm::logistic_regression;
    const StackedModel model =
        train_stacked(spec, two_bases(), dataset, folds, Encoding::continuous, 101);

    CHECK(model.labels == dataset.labels);
    REQUIRE(model.bases.size() == 2);
    CHECK(model.bases[0].name == "word_1");
    CHECK(model.bases[1].name == "char_2");

    int hits = 0;
    for (const Document& doc : dataset.documents) {
        const StackedPrediction p = predict_stacked(model, doc);
        REQUIRE(p.label_index >= 0);
        REQUIRE(p.label_index < 3);
        CHECK(p.label == model.labels[p.label_index]);
        REQUIRE(p.profile.rows.size() == 2);
        REQUIRE(p.profile.labels == model.labels);
        double total = 0.0;
        for (const double v : p.probabilities) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        if (p.label == doc.label) ++hits;
    }
    // Bases refit on the full training set make this a resubstitution
    // estimate; the synthetic corpus is strongly signalled.
    CHECK(static_cast<double>(hits) / dataset.documents.size() >= 0.8);
}

TEST_CASE("train_stacked with a tree-ensemble meta layer round-trips kinds") {
    const Dataset dataset = testing::make_skewed_dataset(2, 10, 13);
    const FoldAssignment folds = stratified_folds(dataset, 2, 3);
    MetaLayerConfig config;
    config.kind = MetaEnsembleKind::random_forest;
    config.estimators = 15;
    const StackedModel model =
        train_stacked(config, two_bases(), dataset, folds, Encoding::continuous, 7);
    CHECK(model.meta.kind == MetaEnsembleKind::random_forest);
    CHECK(model.meta.trees.size() == 15);
    const StackedPrediction p = predict_stacked(model, dataset.documents[0]);
    CHECK(p.probabilities.size() == 2);
}

TEST_CASE("encoding names round-trip") {
    CHECK(encoding_from_name("discrete") == Encoding::discrete_onehot);
    CHECK(encoding_from_name("continuous") == Encoding::continuous);
    CHECK(encoding_from_name(encoding_name(Encoding::discrete_onehot)) ==
          Encoding::discrete_onehot);
    CHECK_THROWS_AS(encoding_from_name("analog"), ConfigError);
}

TEST_CASE("meta-feature generation rejects degenerate setups") {
    const Dataset dataset = testing::make_skewed_dataset(2, 6, 1);
    const FoldAssignment folds = stratified_folds(dataset, 2, 1);
    CHECK_THROWS_AS(generate_meta_features_cv({}, dataset, folds, Encoding::continuous, 0),
                    ConfigError);
}
