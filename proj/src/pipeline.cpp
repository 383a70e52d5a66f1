#include "nlistack/pipeline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>

#include "nlistack/error.hpp"
#include "nlistack/features.hpp"
#include "nlistack/linear_svm.hpp"
#include "nlistack/meta.hpp"
#include "nlistack/numeric.hpp"
#include "nlistack/rng.hpp"

namespace nlistack {

namespace {

// Seed-derivation streams.  Every random decision in a run hangs off the
// experiment seed through one of these labels, so no consumer's draws
// depend on how much randomness another consumer used.
constexpr std::uint64_t kStreamFolds = 0x666f6c6473u; // outer fold assignment
constexpr std::uint64_t kStreamInner = 0x696e6e6572u; // inner meta-feature CV
constexpr std::uint64_t kStreamMeta = 0x6d657461u;    // meta-layer training
constexpr std::uint64_t kStreamTies = 0x74696573u;    // combiner tie-breaking

// Stratified fold ids for the documents listed in subset (dataset indices),
// mirroring stratified_folds but over an index subset: per class, shuffle
// that class's subset members with a class-specific stream, then deal
// round-robin.  Returned vector is aligned with subset.
std::vector<int> stratified_fold_indices(const Dataset& dataset, const std::vector<int>& subset,
                                         int k, std::uint64_t seed) {
    if (k < 2) {
        throw ConfigError("fold count must be at least 2, got " + std::to_string(k));
    }
    const int class_count = static_cast<int>(dataset.labels.size());
    std::vector<std::vector<int>> by_class(class_count); // positions within subset
    for (std::size_t pos = 0; pos < subset.size(); ++pos) {
        const Document& doc = dataset.documents[static_cast<std::size_t>(subset[pos])];
        by_class[dataset.label_index(doc.label)].push_back(static_cast<int>(pos));
    }
    std::vector<int> fold_of(subset.size(), 0);
    for (int c = 0; c < class_count; ++c) {
        std::vector<int>& members = by_class[c];
        if (static_cast<int>(members.size()) < k) {
            throw DataError("class \"" + dataset.labels[static_cast<std::size_t>(c)] + "\" has " +
                            std::to_string(members.size()) + " documents, fewer than the " +
                            std::to_string(k) + " folds requested");
        }
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(members);
        for (std::size_t j = 0; j < members.size(); ++j) {
            fold_of[static_cast<std::size_t>(members[j])] = static_cast<int>(j % k);
        }
    }
    return fold_of;
}

struct FoldModels {
    std::vector<SpaceIndex> spaces;  // T
    std::vector<LinearModel> models; // T
};

// Fits the T feature spaces and base classifiers on train_indices.  Base t
// trains with stream t off fold_seed, matching the derivation order used
// during meta-feature generation.
FoldModels train_fold_bases(const std::vector<BaseClassifierSpec>& base_specs,
                            const std::vector<ExtractedCorpus>& extracted, const Dataset& dataset,
                            const std::vector<int>& train_indices,
                            const std::vector<int>& train_y, std::uint64_t fold_seed) {
    FoldModels fold;
    fold.spaces.reserve(base_specs.size());
    fold.models.reserve(base_specs.size());
    for (std::size_t t = 0; t < base_specs.size(); ++t) {
        SpaceIndex index = fit_space_indexed(extracted[t], train_indices);
        std::vector<SparseVector> X;
        X.reserve(train_indices.size());
        for (int doc_index : train_indices) {
            X.push_back(vectorize_indexed(extracted[t], doc_index, index));
        }
        fold.models.push_back(train_linear_svm_ovr(X, train_y, dataset.labels, base_specs[t].C,
                                                   mix_seed(fold_seed, static_cast<std::uint64_t>(t))));
        fold.spaces.push_back(std::move(index));
    }
    return fold;
}

Eigen::VectorXd encoded_row(const DecisionProfile& profile, Encoding encoding) {
    std::vector<double> row;
    if (encoding == Encoding::discrete_onehot) {
        std::vector<int> predicted;
        predicted.reserve(profile.rows.size());
        for (const std::vector<double>& scores : profile.rows) {
            predicted.push_back(argmax(scores));
        }
        row = encode_discrete(predicted, profile.class_count());
    } else {
        row = encode_continuous(profile);
    }
    return Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
}

MetaLayer train_meta_layer(const MetaLayerConfig& config, const Eigen::MatrixXd& Z,
                           const std::vector<int>& y, int class_count, std::uint64_t seed) {
    switch (config.kind) {
    case MetaEnsembleKind::single: {
        MetaLayer layer;
        layer.kind = MetaEnsembleKind::single;
        layer.spec = config.spec;
        layer.class_count = class_count;
        layer.dim = static_cast<int>(Z.cols());
        layer.members.push_back(train_meta(config.spec, Z, y, class_count, seed));
        return layer;
    }
    case MetaEnsembleKind::bagging:
        return train_bagged_meta(config.spec, Z, y, class_count, config.bags, seed);
    case MetaEnsembleKind::random_forest:
    case MetaEnsembleKind::extra_trees:
    case MetaEnsembleKind::adaboost:
        return train_tree_meta_ensemble(config.kind, Z, y, class_count, config.estimators, seed);
    }
    throw ConfigError("unknown meta-ensemble kind");
}

} // namespace

std::string meta_layer_label(const MetaLayerConfig& config) {
    switch (config.kind) {
    case MetaEnsembleKind::single:
        return meta_algorithm_name(config.spec.algorithm);
    case MetaEnsembleKind::bagging:
        return std::string("bagging(") + meta_algorithm_name(config.spec.algorithm) + ")";
    default:
        return meta_ensemble_kind_name(config.kind);
    }
}

const SystemResult& CrossValidationOutcome::system(const std::string& name) const {
    for (const SystemResult& result : systems) {
        if (result.name == name) {
            return result;
        }
    }
    throw ConfigError("no such system in this outcome: \"" + name + "\"");
}

CrossValidationOutcome cross_validate(const PipelineConfig& config, const Dataset& dataset, int k,
                                      std::uint64_t seed) {
    if (config.base_specs.empty()) {
        throw ConfigError("cross_validate requires at least one base classifier");
    }
    if (config.stacked && config.inner_folds < 2) {
        throw ConfigError("inner fold count must be at least 2, got " +
                          std::to_string(config.inner_folds));
    }
    validate_base_specs(config.base_specs, dataset);

    const int n = static_cast<int>(dataset.documents.size());
    const int class_count = static_cast<int>(dataset.labels.size());
    const std::size_t base_count = config.base_specs.size();

    // Outer fold assignment, derived once; fold_of is in dataset order.
    const FoldAssignment folds = stratified_folds(dataset, k, mix_seed(seed, kStreamFolds));
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    std::vector<int> truth(static_cast<std::size_t>(n));
    std::vector<std::string> doc_ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Document& doc = dataset.documents[static_cast<std::size_t>(i)];
        fold_of[static_cast<std::size_t>(i)] = folds.fold_of(doc.id);
        truth[static_cast<std::size_t>(i)] = dataset.label_index(doc.label);
        doc_ids[static_cast<std::size_t>(i)] = doc.id;
    }

    // Tokenize/count every document once per feature spec; folds then fit
    // and vectorize over integer feature ids only.
    std::vector<ExtractedCorpus> extracted;
    extracted.reserve(base_count);
    std::vector<std::string> base_names;
    base_names.reserve(base_count);
    for (const BaseClassifierSpec& spec : config.base_specs) {
        extracted.push_back(extract_corpus(dataset.documents, spec.feature));
        base_names.push_back(spec.feature.name());
    }

    // Per-document results, written by the owning fold's worker only.
    std::vector<DecisionProfile> profiles(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> base_predictions(
        base_count, std::vector<int>(static_cast<std::size_t>(n), 0));
    std::vector<int> stacked_predictions(static_cast<std::size_t>(n), 0);

    std::atomic<int> next_fold{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto run_fold = [&](int f) {
        const std::uint64_t fold_seed = mix_seed(seed, static_cast<std::uint64_t>(f));
        std::vector<int> train_indices;
        std::vector<int> test_indices;
        for (int i = 0; i < n; ++i) {
            if (fold_of[static_cast<std::size_t>(i)] == f) {
                test_indices.push_back(i);
            } else {
                train_indices.push_back(i);
            }
        }
        std::vector<int> train_y;
        train_y.reserve(train_indices.size());
        for (int doc_index : train_indices) {
            train_y.push_back(truth[static_cast<std::size_t>(doc_index)]);
        }

        const FoldModels fold =
            train_fold_bases(config.base_specs, extracted, dataset, train_indices, train_y,
                             fold_seed);

        // Base outputs for the held-out documents.
        for (int doc_index : test_indices) {
            DecisionProfile profile;
            profile.labels = dataset.labels;
            profile.rows.reserve(base_count);
            for (std::size_t t = 0; t < base_count; ++t) {
                const SparseVector x = vectorize_indexed(extracted[t], doc_index, fold.spaces[t]);
                std::vector<double> row = probabilities(fold.models[t], x);
                base_predictions[t][static_cast<std::size_t>(doc_index)] = argmax(row);
                profile.rows.push_back(std::move(row));
            }
            profiles[static_cast<std::size_t>(doc_index)] = std::move(profile);
        }

        if (!config.stacked) {
            return;
        }

        // Stacked system: out-of-fold meta-features within the training
        // partition, a meta layer over them, and the fold's base models
        // (trained on the full partition) as the inference bases.
        const std::vector<int> inner_fold_of = stratified_fold_indices(
            dataset, train_indices, config.inner_folds, mix_seed(fold_seed, kStreamInner));
        const MetaFeatureMatrix meta_features = meta_features_from_extracted(
            config.base_specs, extracted, dataset, train_indices, inner_fold_of,
            config.inner_folds, config.encoding, mix_seed(fold_seed, kStreamInner),
            /*jobs=*/1, nullptr);
        const MetaLayer layer =
            train_meta_layer(config.meta, meta_features.Z, meta_features.truth, class_count,
                             mix_seed(fold_seed, kStreamMeta));
        for (int doc_index : test_indices) {
            const Eigen::VectorXd z =
                encoded_row(profiles[static_cast<std::size_t>(doc_index)], config.encoding);
            const MetaPrediction prediction = predict_meta_layer(layer, z);
            stacked_predictions[static_cast<std::size_t>(doc_index)] = prediction.label_index;
        }
    };

    const int workers = std::clamp(config.jobs, 1, k);
    if (workers <= 1) {
        for (int f = 0; f < k; ++f) {
            run_fold(f);
        }
    } else {
        auto worker = [&] {
            for (;;) {
                const int f = next_fold.fetch_add(1);
                if (f >= k) {
                    return;
                }
                try {
                    run_fold(f);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            threads.emplace_back(worker);
        }
        for (std::thread& thread : threads) {
            thread.join();
        }
        if (first_error) {
            std::rethrow_exception(first_error);
        }
    }

    // Assemble per-system prediction sets in dataset order.
    CrossValidationOutcome outcome;
    outcome.doc_ids = doc_ids;
    outcome.truth = truth;
    outcome.base_names = base_names;

    auto push_system = [&](const std::string& name, const std::vector<int>& predicted) {
        SystemResult result;
        result.name = name;
        result.predictions.entries.reserve(static_cast<std::size_t>(n));
        int correct = 0;
        for (int i = 0; i < n; ++i) {
            const int predicted_index = predicted[static_cast<std::size_t>(i)];
            result.predictions.entries.push_back(
                {doc_ids[static_cast<std::size_t>(i)],
                 dataset.labels[static_cast<std::size_t>(truth[static_cast<std::size_t>(i)])],
                 dataset.labels[static_cast<std::size_t>(predicted_index)]});
            if (predicted_index == truth[static_cast<std::size_t>(i)]) {
                ++correct;
            }
        }
        result.accuracy = n > 0 ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
        outcome.systems.push_back(std::move(result));
    };

    for (std::size_t t = 0; t < base_count; ++t) {
        push_system("base:" + base_names[t], base_predictions[t]);
    }

    const std::uint64_t tie_seed = mix_seed(seed, kStreamTies);
    for (Combiner combiner : config.combiners) {
        std::vector<int> predicted(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) {
            const FusionResult fused =
                apply_combiner(combiner, profiles[static_cast<std::size_t>(i)],
                               mix_seed(tie_seed, static_cast<std::uint64_t>(i)));
            predicted[static_cast<std::size_t>(i)] = fused.label_index;
        }
        push_system(std::string("combiner:") + combiner_name(combiner), predicted);
    }

    if (config.stacked) {
        push_system("stacked:" + meta_layer_label(config.meta), stacked_predictions);
    }

    outcome.oracle_accuracy = oracle(profiles, truth).accuracy;
    for (int N : config.accuracy_at) {
        outcome.accuracy_at.emplace_back(N, accuracy_at_n(profiles, truth, N, tie_seed));
    }

    if (config.keep_profiles) {
        outcome.profiles = std::move(profiles);
    }
    return outcome;
}

} // namespace nlistack
