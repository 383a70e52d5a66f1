#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlistack/corpus.hpp"
#include "nlistack/features.hpp"
#include "nlistack/fusion.hpp"
#include "nlistack/linear_svm.hpp"
#include "nlistack/meta.hpp"
#include "nlistack/tree.hpp"

namespace nlistack {

enum class Encoding { discrete_onehot, continuous };

const char* encoding_name(Encoding encoding);
Encoding encoding_from_name(const std::string& name);

// One base classifier: a feature configuration plus its SVM cost.
struct BaseClassifierSpec {
    FeatureSpec feature;
    double C = 1.0;
};

// Out-of-fold base-classifier outputs for a training set, encoded as dense
// meta-features: row i belongs to document i, columns are T blocks of K.
struct MetaFeatureMatrix {
    Eigen::MatrixXd Z;
    Encoding encoding = Encoding::continuous;
    std::vector<std::string> base_names; // T
    std::vector<std::string> labels;     // K
    std::vector<int> truth;              // n label indices
    std::vector<std::string> doc_ids;    // n
};

// Rejects base specs the dataset cannot satisfy (lemma/POS features on
// unannotated data, function-word features without a list).
void validate_base_specs(const std::vector<BaseClassifierSpec>& base_specs,
                         const Dataset& dataset);

// One-hot concatenation of T predicted label indices.
std::vector<double> encode_discrete(const std::vector<int>& predicted_labels, int class_count);
// Same, by label name against an explicit label order.
std::vector<double> encode_discrete(const std::vector<std::string>& predicted_labels,
                                    const std::vector<std::string>& label_order);
// Row-major concatenation of the T probability rows.
std::vector<double> encode_continuous(const DecisionProfile& profile);

// Optional instrumentation for out-of-fold purity checks: which documents
// trained each fold's base models, and which fold produced each row.
struct MetaFeatureTrace {
    std::vector<std::vector<std::string>> fold_train_ids; // per fold
    std::vector<int> row_fold;                            // per row
};

// For each fold f: fit T feature spaces and T base SVMs on the documents
// outside f, then produce encoded outputs for the documents inside f.
// Every row is therefore out-of-fold.  Rows follow the dataset order.
MetaFeatureMatrix generate_meta_features_cv(const std::vector<BaseClassifierSpec>& base_specs,
                                            const Dataset& train, const FoldAssignment& folds,
                                            Encoding encoding, std::uint64_t seed, int jobs = 1,
                                            MetaFeatureTrace* trace = nullptr);

// CSV export: header of base x label column names with a final truth
// column, then one row per instance.
void export_meta_features(const MetaFeatureMatrix& features, std::ostream& out);

// How the meta layer on top of the base classifiers is built.
enum class MetaEnsembleKind { single, bagging, random_forest, extra_trees, adaboost };

const char* meta_ensemble_kind_name(MetaEnsembleKind kind);

struct MetaLayerConfig {
    MetaEnsembleKind kind = MetaEnsembleKind::single;
    MetaLearnerSpec spec; // meta-learner for single / bagging
    int bags = 25;
    int estimators = 100;
};

// A fitted meta layer: one meta-model, B bagged meta-models, or a tree
// ensemble.  Ensemble members are always fused by mean probability.
struct MetaLayer {
    MetaEnsembleKind kind = MetaEnsembleKind::single;
    MetaLearnerSpec spec;
    int class_count = 0;
    int dim = 0;
    std::vector<MetaModel> members;  // single: 1; bagging: B
    std::vector<DecisionTree> trees; // forest / extra trees / adaboost stumps
    std::vector<double> alphas;      // adaboost member weights
};

MetaPrediction predict_meta_layer(const MetaLayer& layer, const Eigen::Ref<const Eigen::VectorXd>& z);

struct BaggingOptions {
    bool bootstrap = true; // test hook: false trains every bag on the full data
    int max_retries = 50;  // bags missing a class are redrawn up to this many times
};

// B bootstrap resamples of the meta-feature rows, one meta-model per bag.
MetaLayer train_bagged_meta(const MetaLearnerSpec& spec, const Eigen::MatrixXd& Z,
                            const std::vector<int>& y, int class_count, int bags,
                            std::uint64_t seed, const BaggingOptions& options = {});

// Random forest (bootstrap + sqrt(d) feature subsets), extra trees (no
// bootstrap, random thresholds), or SAMME AdaBoost over depth-1 stumps.
MetaLayer train_tree_meta_ensemble(MetaEnsembleKind kind, const Eigen::MatrixXd& Z,
                                   const std::vector<int>& y, int class_count, int n_estimators,
                                   std::uint64_t seed);

// A full stacked classifier: T base classifiers (refit on the complete
// training set) plus the meta layer trained on out-of-fold meta-features.
struct TrainedBase {
    std::string name;
    double C = 1.0;
    FeatureSpace space;
    LinearModel model;
};

struct StackedModel {
    std::vector<TrainedBase> bases;
    Encoding encoding = Encoding::continuous;
    std::vector<std::string> labels;
    MetaLayer meta;
};

StackedModel train_stacked(const MetaLayerConfig& meta_config,
                           const std::vector<BaseClassifierSpec>& base_specs, const Dataset& train,
                           const FoldAssignment& folds, Encoding encoding, std::uint64_t seed,
                           int jobs = 1);

// Convenience overload for a plain single meta-learner.
StackedModel train_stacked(const MetaLearnerSpec& spec,
                           const std::vector<BaseClassifierSpec>& base_specs, const Dataset& train,
                           const FoldAssignment& folds, Encoding encoding, std::uint64_t seed,
                           int jobs = 1);

struct StackedPrediction {
    std::string label;
    int label_index = 0;
    std::vector<double> probabilities;
    DecisionProfile profile; // the base outputs, for diagnostics
};

StackedPrediction predict_stacked(const StackedModel& model, const Document& doc);

// Internal-but-reusable core: meta-features over an arbitrary subset of
// already-extracted documents.  subset lists document indices; fold_of is
// aligned with subset and holds fold ids in [0, fold_count).  Both the
// public generate_meta_features_cv and the cross-validation pipeline feed
// this one implementation.
MetaFeatureMatrix meta_features_from_extracted(
    const std::vector<BaseClassifierSpec>& base_specs,
    const std::vector<ExtractedCorpus>& extracted, const Dataset& dataset,
    const std::vector<int>& subset, const std::vector<int>& fold_of, int fold_count,
    Encoding encoding, std::uint64_t seed, int jobs, MetaFeatureTrace* trace);

} // namespace nlistack
