#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nlistack/corpus.hpp"
#include "nlistack/eval.hpp"
#include "nlistack/fusion.hpp"
#include "nlistack/stacking.hpp"

namespace nlistack {

// Everything a cross-validated experiment needs besides the dataset: the
// base classifiers, which fusion combiners to score, and (optionally) a
// stacked meta layer.
struct PipelineConfig {
    std::vector<BaseClassifierSpec> base_specs;
    std::vector<Combiner> combiners;

    bool stacked = false;
    MetaLayerConfig meta;
    Encoding encoding = Encoding::continuous;
    int inner_folds = 10; // meta-feature CV inside each training partition

    std::vector<int> accuracy_at = {2, 3};
    int jobs = 1;
    bool keep_profiles = false;
};

// Short display name for the configured meta layer, e.g. "lda",
// "bagging(lda)", "random-forest".
std::string meta_layer_label(const MetaLayerConfig& config);

struct SystemResult {
    std::string name;
    PredictionSet predictions;
    double accuracy = 0.0;
};

struct CrossValidationOutcome {
    std::vector<SystemResult> systems; // bases, then combiners, then the stacked system
    double oracle_accuracy = 0.0;
    std::vector<std::pair<int, double>> accuracy_at; // (N, accuracy)
    std::vector<std::string> doc_ids;                // dataset order
    std::vector<int> truth;
    std::vector<std::string> base_names;
    std::vector<DecisionProfile> profiles; // filled only when config.keep_profiles

    const SystemResult& system(const std::string& name) const;
};

// Stratified k-fold cross-validation of the full pipeline.  Per fold: fit
// feature spaces and base classifiers on the training partition, evaluate
// on the held-out fold; the stacked system additionally runs inner-CV
// meta-feature generation within each training partition.  Fold results
// are merged in dataset order; every prediction comes from models that
// never saw the predicted document.  Deterministic for a fixed seed at any
// jobs value.
CrossValidationOutcome cross_validate(const PipelineConfig& config, const Dataset& dataset, int k,
                                      std::uint64_t seed);

} // namespace nlistack
