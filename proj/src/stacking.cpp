#include "nlistack/stacking.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>

#include "nlistack/error.hpp"
#include "nlistack/numeric.hpp"

namespace nlistack {

namespace {

// Named sub-streams of the master seed, so every component draws from an
// independent, order-independent random stream.
constexpr std::uint64_t kStreamMeta = 0x6d657461u;   // meta-layer training
constexpr std::uint64_t kStreamRefit = 0x7265666974u; // full-train base refits

std::vector<double> mean_of_rows_sorted(const std::vector<std::vector<double>>& rows) {
    const std::size_t K = rows[0].size();
    std::vector<double> scores(K);
    std::vector<double> col(rows.size());
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t t = 0; t < rows.size(); ++t) col[t] = rows[t][k];
        // Summing in sorted order makes the fusion bit-exactly invariant to
        // member order.
        std::sort(col.begin(), col.end());
        double sum = 0.0;
        for (const double v : col) sum += v;
        scores[k] = sum / static_cast<double>(rows.size());
    }
    return scores;
}

} // namespace

void validate_base_specs(const std::vector<BaseClassifierSpec>& base_specs,
                         const Dataset& dataset) {
    const bool lemmas = dataset.has_lemmas();
    const bool pos = dataset.has_pos();
    for (const auto& spec : base_specs) {
        if (spec.feature.type == FeatureType::lemma_ngram && !lemmas)
            throw DataError("feature type '" + spec.feature.name() +
                            "' requires lemma annotation, which this dataset lacks");
        if (spec.feature.type == FeatureType::pos_ngram && !pos)
            throw DataError("feature type '" + spec.feature.name() +
                            "' requires POS annotation, which this dataset lacks");
        if (spec.feature.type == FeatureType::funcword_ngram && spec.feature.function_words.words.empty())
            throw ConfigError("feature type '" + spec.feature.name() +
                              "' requires a function-word list");
    }
}

const char* encoding_name(Encoding encoding) {
    return encoding == Encoding::discrete_onehot ? "discrete" : "continuous";
}

Encoding encoding_from_name(const std::string& name) {
    if (name == "discrete") return Encoding::discrete_onehot;
    if (name == "continuous") return Encoding::continuous;
    throw ConfigError("unknown encoding '" + name + "' (expected discrete or continuous)");
}

const char* meta_ensemble_kind_name(MetaEnsembleKind kind) {
    switch (kind) {
        case MetaEnsembleKind::single: return "single";
        case MetaEnsembleKind::bagging: return "bagging";
        case MetaEnsembleKind::random_forest: return "random-forest";
        case MetaEnsembleKind::extra_trees: return "extra-trees";
        case MetaEnsembleKind::adaboost: return "adaboost";
    }
    return "?";
}

std::vector<double> encode_discrete(const std::vector<int>& predicted_labels, int class_count) {
    std::vector<double> z(predicted_labels.size() * static_cast<std::size_t>(class_count), 0.0);
    for (std::size_t t = 0; t < predicted_labels.size(); ++t) {
        const int p = predicted_labels[t];
        if (p < 0 || p >= class_count)
            throw DataError("predicted label index out of range in discrete encoding");
        z[t * class_count + p] = 1.0;
    }
    return z;
}

std::vector<double> encode_discrete(const std::vector<std::string>& predicted_labels,
                                    const std::vector<std::string>& label_order) {
    std::vector<int> indices(predicted_labels.size());
    for (std::size_t t = 0; t < predicted_labels.size(); ++t) {
        const auto it = std::find(label_order.begin(), label_order.end(), predicted_labels[t]);
        if (it == label_order.end())
            throw DataError("predicted label '" + predicted_labels[t] +
                            "' is not in the label order");
        indices[t] = static_cast<int>(it - label_order.begin());
    }
    return encode_discrete(indices, static_cast<int>(label_order.size()));
}

std::vector<double> encode_continuous(const DecisionProfile& profile) {
    std::vector<double> z;
    z.reserve(static_cast<std::size_t>(profile.base_count()) * profile.class_count());
    for (const auto& row : profile.rows) z.insert(z.end(), row.begin(), row.end());
    return z;
}

MetaFeatureMatrix meta_features_from_extracted(
    const std::vector<BaseClassifierSpec>& base_specs,
    const std::vector<ExtractedCorpus>& extracted, const Dataset& dataset,
    const std::vector<int>& subset, const std::vector<int>& fold_of, int fold_count,
    Encoding encoding, std::uint64_t seed, int jobs, MetaFeatureTrace* trace) {
    const int T = static_cast<int>(base_specs.size());
    const int K = static_cast<int>(dataset.labels.size());
    if (T < 1) throw ConfigError("stacking needs at least one base classifier");
    if (fold_count < 2) throw ConfigError("meta-feature generation needs at least 2 folds");
    if (subset.size() != fold_of.size())
        throw ConfigError("meta-feature generation: subset/fold assignment size mismatch");

    MetaFeatureMatrix mf;
    mf.encoding = encoding;
    mf.labels = dataset.labels;
    for (const auto& spec : base_specs) mf.base_names.push_back(spec.feature.name());
    mf.Z.resize(static_cast<Eigen::Index>(subset.size()), static_cast<Eigen::Index>(T) * K);
    mf.truth.resize(subset.size());
    mf.doc_ids.resize(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const Document& doc = dataset.documents[subset[i]];
        mf.truth[i] = dataset.label_index(doc.label);
        mf.doc_ids[i] = doc.id;
    }
    if (trace) {
        trace->fold_train_ids.assign(fold_count, {});
        trace->row_fold.assign(subset.size(), -1);
        for (std::size_t i = 0; i < subset.size(); ++i) trace->row_fold[i] = fold_of[i];
    }

    // Per-fold work: fit T spaces and T base models on the out-of-fold
    // documents, then fill the in-fold rows.  Folds write disjoint rows and
    // use independent seed streams, so they can run on worker threads with
    // bit-identical results at any job count.
    std::atomic<int> next_fold{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;

    auto run_fold = [&](int f) {
        std::vector<int> train_docs, train_rows, test_rows;
        for (std::size_t i = 0; i < subset.size(); ++i) {
            if (fold_of[i] == f) test_rows.push_back(static_cast<int>(i));
            else {
                train_docs.push_back(subset[i]);
                train_rows.push_back(static_cast<int>(i));
            }
        }
        if (test_rows.empty()) return;
        if (trace) {
            auto& ids = trace->fold_train_ids[f];
            for (const int d : train_docs) ids.push_back(dataset.documents[d].id);
        }
        std::vector<int> y_train(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) y_train[i] = mf.truth[train_rows[i]];

        const std::uint64_t fold_seed = mix_seed(seed, static_cast<std::uint64_t>(f));
        for (int t = 0; t < T; ++t) {
            const SpaceIndex index = fit_space_indexed(extracted[t], train_docs);
            std::vector<SparseVector> X(train_docs.size());
            for (std::size_t i = 0; i < train_docs.size(); ++i)
                X[i] = vectorize_indexed(extracted[t], train_docs[i], index);
            const LinearModel model =
                train_linear_svm_ovr(X, y_train, dataset.labels, base_specs[t].C,
                                     mix_seed(fold_seed, static_cast<std::uint64_t>(t)));
            for (const int row : test_rows) {
                const SparseVector x = vectorize_indexed(extracted[t], subset[row], index);
                const std::vector<double> probs = probabilities(model, x);
                if (encoding == Encoding::continuous) {
                    for (int k = 0; k < K; ++k) mf.Z(row, t * K + k) = probs[k];
                } else {
                    const int winner = static_cast<int>(argmax(probs));
                    for (int k = 0; k < K; ++k) mf.Z(row, t * K + k) = k == winner ? 1.0 : 0.0;
                }
            }
        }
    };

    const int workers = std::clamp(jobs, 1, fold_count);
    if (workers == 1) {
        for (int f = 0; f < fold_count; ++f) run_fold(f);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const int f = next_fold.fetch_add(1);
                    if (f >= fold_count) return;
                    try {
                        run_fold(f);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    return mf;
}

MetaFeatureMatrix generate_meta_features_cv(const std::vector<BaseClassifierSpec>& base_specs,
                                            const Dataset& train, const FoldAssignment& folds,
                                            Encoding encoding, std::uint64_t seed, int jobs,
                                            MetaFeatureTrace* trace) {
    validate_base_specs(base_specs, train);
    std::vector<ExtractedCorpus> extracted;
    extracted.reserve(base_specs.size());
    for (const auto& spec : base_specs)
        extracted.push_back(extract_corpus(train.documents, spec.feature));

    std::vector<int> subset(train.documents.size());
    std::vector<int> fold_of(train.documents.size());
    for (std::size_t i = 0; i < train.documents.size(); ++i) {
        subset[i] = static_cast<int>(i);
        fold_of[i] = folds.fold_of(train.documents[i].id);
    }
    return meta_features_from_extracted(base_specs, extracted, train, subset, fold_of, folds.k,
                                        encoding, seed, jobs, trace);
}

void export_meta_features(const MetaFeatureMatrix& features, std::ostream& out) {
    bool first = true;
    for (const auto& base : features.base_names) {
        for (const auto& label : features.labels) {
            if (!first) out << ',';
            out << base << ':' << label;
            first = false;
        }
    }
    out << ",truth\n";
    char buf[32];
    for (Eigen::Index i = 0; i < features.Z.rows(); ++i) {
        for (Eigen::Index j = 0; j < features.Z.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", features.Z(i, j));
            out << buf << ',';
        }
        out << features.labels[features.truth[i]] << '\n';
    }
}

MetaPrediction predict_meta_layer(const MetaLayer& layer,
                                  const Eigen::Ref<const Eigen::VectorXd>& z) {
    switch (layer.kind) {
        case MetaEnsembleKind::single:
            return predict_meta(layer.members[0], z);
        case MetaEnsembleKind::bagging: {
            std::vector<std::vector<double>> rows;
            rows.reserve(layer.members.size());
            for (const auto& member : layer.members)
                rows.push_back(predict_meta(member, z).probabilities);
            MetaPrediction p;
            p.probabilities = mean_of_rows_sorted(rows);
            p.label_index = static_cast<int>(argmax(p.probabilities));
            return p;
        }
        case MetaEnsembleKind::random_forest:
        case MetaEnsembleKind::extra_trees: {
            std::vector<std::vector<double>> rows;
            rows.reserve(layer.trees.size());
            for (const auto& tree : layer.trees) rows.push_back(tree.predict_probs(z));
            MetaPrediction p;
            p.probabilities = mean_of_rows_sorted(rows);
            p.label_index = static_cast<int>(argmax(p.probabilities));
            return p;
        }
        case MetaEnsembleKind::adaboost: {
            std::vector<double> scores(layer.class_count, 0.0);
            double alpha_sum = 0.0;
            for (std::size_t m = 0; m < layer.trees.size(); ++m) {
                const auto& probs = layer.trees[m].predict_probs(z);
                scores[argmax(probs)] += layer.alphas[m];
                alpha_sum += layer.alphas[m];
            }
            MetaPrediction p;
            for (double& s : scores) s /= alpha_sum;
            p.probabilities = std::move(scores);
            p.label_index = static_cast<int>(argmax(p.probabilities));
            return p;
        }
    }
    throw ConfigError("meta layer has unknown kind");
}

MetaLayer train_bagged_meta(const MetaLearnerSpec& spec, const Eigen::MatrixXd& Z,
                            const std::vector<int>& y, int class_count, int bags,
                            std::uint64_t seed, const BaggingOptions& options) {
    if (bags < 1) throw ConfigError("bag count must be at least 1");
    const std::size_t n = y.size();

    MetaLayer layer;
    layer.kind = MetaEnsembleKind::bagging;
    layer.spec = spec;
    layer.class_count = class_count;
    layer.dim = static_cast<int>(Z.cols());
    layer.members.reserve(bags);

    for (int b = 0; b < bags; ++b) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<int> sample(n);
        std::vector<int> y_bag(n);
        bool ok = false;
        for (int attempt = 0; attempt <= options.max_retries && !ok; ++attempt) {
            std::vector<bool> seen(class_count, false);
            for (std::size_t i = 0; i < n; ++i) {
                const int pick = options.bootstrap
                                     ? static_cast<int>(rng.uniform_below(n))
                                     : static_cast<int>(i);
                sample[i] = pick;
                y_bag[i] = y[pick];
                seen[y[pick]] = true;
            }
            ok = std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
            if (!options.bootstrap) break; // identity bags cannot be redrawn
        }
        if (!ok)
            throw DataError("bag " + std::to_string(b) + " kept missing a class after " +
                            std::to_string(options.max_retries) + " redraws");
        Eigen::MatrixXd Z_bag(n, Z.cols());
        for (std::size_t i = 0; i < n; ++i) Z_bag.row(i) = Z.row(sample[i]);
        // Bag composition and member training draw from separate streams.
        const std::uint64_t member_seed = mix_seed(mix_seed(seed, 0x747261696eULL), b);
        layer.members.push_back(train_meta(spec, Z_bag, y_bag, class_count, member_seed));
    }
    return layer;
}

MetaLayer train_tree_meta_ensemble(MetaEnsembleKind kind, const Eigen::MatrixXd& Z,
                                   const std::vector<int>& y, int class_count, int n_estimators,
                                   std::uint64_t seed) {
    if (kind != MetaEnsembleKind::random_forest && kind != MetaEnsembleKind::extra_trees &&
        kind != MetaEnsembleKind::adaboost)
        throw ConfigError("tree meta-ensemble kind must be random-forest, extra-trees or adaboost");
    if (n_estimators < 1) throw ConfigError("estimator count must be at least 1");
    if (Z.rows() != static_cast<Eigen::Index>(y.size()))
        throw ConfigError("tree meta-ensemble: row/label count mismatch");
    if (!Z.allFinite()) throw NumericError("non-finite value in meta-feature matrix");

    const std::size_t n = y.size();
    const int d = static_cast<int>(Z.cols());
    const int subset = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

    MetaLayer layer;
    layer.kind = kind;
    layer.class_count = class_count;
    layer.dim = d;

    std::vector<int> all_indices(n);
    for (std::size_t i = 0; i < n; ++i) all_indices[i] = static_cast<int>(i);

    if (kind == MetaEnsembleKind::adaboost) {
        // SAMME over depth-1 stumps.
        std::vector<double> weights(n, 1.0 / static_cast<double>(n));
        TreeOptions options;
        options.max_depth = 1;
        const double chance = 1.0 - 1.0 / static_cast<double>(class_count);
        for (int m = 0; m < n_estimators; ++m) {
            Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
            DecisionTree stump =
                train_decision_tree(Z, y, class_count, weights, all_indices, options, rng);
            std::vector<bool> miss(n);
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                miss[i] = static_cast<int>(argmax(stump.predict_probs(Z.row(i).transpose()))) != y[i];
                if (miss[i]) err += weights[i];
            }
            if (err <= 1e-12) {
                // Perfect member: keep it and stop boosting.
                layer.trees.push_back(std::move(stump));
                layer.alphas.push_back(1.0);
                break;
            }
            if (err >= chance) {
                if (layer.trees.empty())
                    throw NumericError("adaboost failed: first stump is no better than chance");
                break;
            }
            const double alpha = std::log((1.0 - err) / err) +
                                 std::log(static_cast<double>(class_count) - 1.0);
            layer.trees.push_back(std::move(stump));
            layer.alphas.push_back(alpha);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (miss[i]) weights[i] *= std::exp(alpha);
                total += weights[i];
            }
            for (double& w : weights) w /= total;
        }
        return layer;
    }

    const std::vector<double> unit_weights(n, 1.0);
    TreeOptions options;
    options.feature_subset = subset;
    options.random_thresholds = kind == MetaEnsembleKind::extra_trees;
    for (int b = 0; b < n_estimators; ++b) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(b)));
        std::vector<int> sample;
        if (kind == MetaEnsembleKind::random_forest) {
            sample.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                sample[i] = static_cast<int>(rng.uniform_below(n));
        } else {
            sample = all_indices; // extra trees: no bootstrap
        }
        layer.trees.push_back(
            train_decision_tree(Z, y, class_count, unit_weights, sample, options, rng));
    }
    return layer;
}

StackedModel train_stacked(const MetaLayerConfig& meta_config,
                           const std::vector<BaseClassifierSpec>& base_specs, const Dataset& train,
                           const FoldAssignment& folds, Encoding encoding, std::uint64_t seed,
                           int jobs) {
    validate_base_specs(base_specs, train);
    const int K = static_cast<int>(train.labels.size());

    std::vector<ExtractedCorpus> extracted;
    extracted.reserve(base_specs.size());
    for (const auto& spec : base_specs)
        extracted.push_back(extract_corpus(train.documents, spec.feature));

    std::vector<int> subset(train.documents.size());
    std::vector<int> fold_of(train.documents.size());
    for (std::size_t i = 0; i < train.documents.size(); ++i) {
        subset[i] = static_cast<int>(i);
        fold_of[i] = folds.fold_of(train.documents[i].id);
    }
    const MetaFeatureMatrix mf = meta_features_from_extracted(
        base_specs, extracted, train, subset, fold_of, folds.k, encoding, seed, jobs, nullptr);

    StackedModel model;
    model.encoding = encoding;
    model.labels = train.labels;

    const std::uint64_t meta_seed = mix_seed(seed, kStreamMeta);
    switch (meta_config.kind) {
        case MetaEnsembleKind::single:
            model.meta.kind = MetaEnsembleKind::single;
            model.meta.spec = meta_config.spec;
            model.meta.class_count = K;
            model.meta.dim = static_cast<int>(mf.Z.cols());
            model.meta.members.push_back(
                train_meta(meta_config.spec, mf.Z, mf.truth, K, meta_seed));
            break;
        case MetaEnsembleKind::bagging:
            model.meta = train_bagged_meta(meta_config.spec, mf.Z, mf.truth, K,
                                           meta_config.bags, meta_seed);
            break;
        default:
            model.meta = train_tree_meta_ensemble(meta_config.kind, mf.Z, mf.truth, K,
                                                  meta_config.estimators, meta_seed);
            break;
    }

    // Refit the base classifiers on the complete training set; these are
    // the models used at inference time.
    const std::uint64_t refit_seed = mix_seed(seed, kStreamRefit);
    std::vector<int> y_all(train.documents.size());
    for (std::size_t i = 0; i < y_all.size(); ++i)
        y_all[i] = train.label_index(train.documents[i].label);
    for (std::size_t t = 0; t < base_specs.size(); ++t) {
        const SpaceIndex index = fit_space_indexed(extracted[t], subset);
        std::vector<SparseVector> X(subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i)
            X[i] = vectorize_indexed(extracted[t], subset[i], index);
        TrainedBase base;
        base.name = base_specs[t].feature.name();
        base.C = base_specs[t].C;
        base.space = index.space;
        base.model = train_linear_svm_ovr(X, y_all, train.labels, base_specs[t].C,
                                          mix_seed(refit_seed, t));
        model.bases.push_back(std::move(base));
    }
    return model;
}

StackedModel train_stacked(const MetaLearnerSpec& spec,
                           const std::vector<BaseClassifierSpec>& base_specs, const Dataset& train,
                           const FoldAssignment& folds, Encoding encoding, std::uint64_t seed,
                           int jobs) {
    MetaLayerConfig config;
    config.kind = MetaEnsembleKind::single;
    config.spec = spec;
    return train_stacked(config, base_specs, train, folds, encoding, seed, jobs);
}

StackedPrediction predict_stacked(const StackedModel& model, const Document& doc) {
    const int K = static_cast<int>(model.labels.size());
    StackedPrediction result;
    result.profile.labels = model.labels;
    for (const auto& base : model.bases) {
        const SparseVector x = vectorize(doc, base.space);
        result.profile.rows.push_back(probabilities(base.model, x));
    }

    std::vector<double> z;
    if (model.encoding == Encoding::continuous) {
        z = encode_continuous(result.profile);
    } else {
        std::vector<int> votes(model.bases.size());
        for (std::size_t t = 0; t < model.bases.size(); ++t)
            votes[t] = static_cast<int>(argmax(result.profile.rows[t]));
        z = encode_discrete(votes, K);
    }
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    MetaPrediction meta = predict_meta_layer(model.meta, zv);
    result.label_index = meta.label_index;
    result.label = model.labels[meta.label_index];
    result.probabilities = std::move(meta.probabilities);
    return result;
}

} // namespace nlistack
