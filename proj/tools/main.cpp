// nlistack command-line frontend.
//
// Subcommands: gen-docs, extract, fuse, stack, mcnemar, eval.  Every
// command writes the fully resolved configuration (defaults filled in)
// plus the master seed to <out>/run_config.cfg; rerunning a command with
// --config pointing at that echo reproduces the outputs byte for byte.
// Explicit command-line flags override config-file values.  --out and
// --jobs are execution parameters, not experiment identity, so they are
// neither read from nor written to config files.
//
// Exit status: 0 success, 1 usage/configuration error, 2 data error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlistack/corpus.hpp"
#include "nlistack/error.hpp"
#include "nlistack/eval.hpp"
#include "nlistack/features.hpp"
#include "nlistack/fusion.hpp"
#include "nlistack/meta.hpp"
#include "nlistack/model_io.hpp"
#include "nlistack/numeric.hpp"
#include "nlistack/pipeline.hpp"
#include "nlistack/rng.hpp"
#include "nlistack/stacking.hpp"

namespace {

using namespace nlistack;

// ---------------------------------------------------------------------------
// Formatting helpers (snprintf keeps the output byte-stable across locales).

std::string fixed6(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6f", value);
    return buffer;
}

std::string fixed2(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

std::string machine(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    std::size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

// ---------------------------------------------------------------------------
// Config echo + reload.
//
// Format: "key = value" lines, '#' starts a comment.  The command key names
// the subcommand the file belongs to.

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open config file: " + path);
    }
    std::map<std::string, std::string> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected \"key = value\", got \"" + stripped + "\"");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!values.emplace(key, value).second) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key \"" + key +
                              "\"");
        }
    }
    return values;
}

// Tracks which config keys were consumed so typos are rejected.
class ConfigOverlay {
public:
    ConfigOverlay() = default;

    void load(const std::string& path, const std::string& command) {
        values_ = read_config_file(path);
        path_ = path;
        auto it = values_.find("command");
        if (it != values_.end()) {
            if (it->second != command) {
                throw ConfigError(path + ": config is for command \"" + it->second +
                                  "\", not \"" + command + "\"");
            }
            used_.insert("command");
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string raw(const std::string& key) {
        used_.insert(key);
        return values_.at(key);
    }

    void apply(const CLI::Option* opt, const std::string& key, std::string& var) {
        if (opt->count() == 0 && has(key)) {
            var = raw(key);
        }
    }

    void apply(const CLI::Option* opt, const std::string& key, bool& var) {
        if (opt->count() == 0 && has(key)) {
            const std::string value = raw(key);
            if (value == "true" || value == "1") {
                var = true;
            } else if (value == "false" || value == "0") {
                var = false;
            } else {
                throw ConfigError(path_ + ": key \"" + key + "\" expects true/false, got \"" +
                                  value + "\"");
            }
        }
    }

    template <typename T>
    void apply_number(const CLI::Option* opt, const std::string& key, T& var) {
        if (opt->count() == 0 && has(key)) {
            const std::string value = raw(key);
            std::istringstream stream(value);
            T parsed{};
            if (!(stream >> parsed) || !(stream >> std::ws).eof()) {
                throw ConfigError(path_ + ": key \"" + key + "\" has non-numeric value \"" +
                                  value + "\"");
            }
            var = parsed;
        }
    }

    void finish() const {
        for (const auto& [key, value] : values_) {
            (void)value;
            if (used_.count(key) == 0) {
                throw ConfigError(path_ + ": unknown key \"" + key + "\"");
            }
        }
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
    std::string path_;
};

void write_echo(const std::string& out_dir, const std::string& command,
                const std::vector<std::pair<std::string, std::string>>& entries) {
    const std::string path = out_dir + "/run_config.cfg";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write config echo: " + path);
    }
    out << "# resolved run configuration (defaults filled in)\n";
    out << "# rerun: nlistack " << command << " --config run_config.cfg --out <dir>\n";
    out << "command = " << command << "\n";
    for (const auto& [key, value] : entries) {
        out << key << " = " << value << "\n";
    }
    if (!out) {
        throw DataError("failed while writing config echo: " + path);
    }
}

void ensure_out_dir(const std::string& out_dir) {
    if (out_dir.empty()) {
        throw ConfigError("missing --out output directory");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw DataError("cannot create output directory " + out_dir + ": " + ec.message());
    }
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open output file: " + path);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Option-string parsing.

CorpusFormat parse_format(const std::string& name) {
    if (name == "plain") {
        return CorpusFormat::plain;
    }
    if (name == "annotated") {
        return CorpusFormat::annotated;
    }
    throw ConfigError("unknown corpus format \"" + name + "\" (valid: plain, annotated)");
}

const char* format_name(CorpusFormat format) {
    return format == CorpusFormat::plain ? "plain" : "annotated";
}

// Feature tokens look like "word_2", "char_3", "fw_1", "pos_2", "lemma_1".
FeatureSpec parse_feature_token(const std::string& token, int min_df, bool tfidf,
                                const FunctionWordList& function_words) {
    const std::size_t underscore = token.rfind('_');
    if (underscore == std::string::npos || underscore == 0 || underscore + 1 == token.size()) {
        throw ConfigError("bad feature token \"" + token +
                          "\" (expected <type>_<order>, e.g. word_2)");
    }
    FeatureSpec spec;
    spec.type = feature_type_from_name(token.substr(0, underscore));
    try {
        spec.n = std::stoi(token.substr(underscore + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad n-gram order in feature token \"" + token + "\"");
    }
    spec.min_df = min_df;
    spec.tfidf = tfidf;
    if (spec.type == FeatureType::funcword_ngram) {
        spec.function_words = function_words;
    }
    return spec;
}

std::vector<FeatureSpec> parse_feature_list(const std::string& csv, int min_df, bool tfidf,
                                            const std::string& fw_list_path) {
    FunctionWordList function_words;
    if (!fw_list_path.empty()) {
        function_words = load_function_words(fw_list_path);
    }
    std::vector<FeatureSpec> specs;
    for (const std::string& raw_token : split(csv, ',')) {
        const std::string token = trim(raw_token);
        if (token.empty()) {
            throw ConfigError("empty feature token in list \"" + csv + "\"");
        }
        FeatureSpec spec = parse_feature_token(token, min_df, tfidf, function_words);
        if (spec.type == FeatureType::funcword_ngram && fw_list_path.empty()) {
            throw ConfigError("feature \"" + token + "\" needs a function-word list (--fw-list)");
        }
        specs.push_back(std::move(spec));
    }
    if (specs.empty()) {
        throw ConfigError("feature list is empty");
    }
    return specs;
}

std::vector<BaseClassifierSpec> build_base_specs(const std::vector<FeatureSpec>& features,
                                                 double svm_c) {
    std::vector<BaseClassifierSpec> specs;
    specs.reserve(features.size());
    for (const FeatureSpec& feature : features) {
        BaseClassifierSpec spec;
        spec.feature = feature;
        spec.C = svm_c;
        specs.push_back(std::move(spec));
    }
    return specs;
}

// Meta-learner strings: "lda", "knn:k=3", "logistic:lambda=0.001",
// "bagging(ridge)", "random-forest", "extra-trees", "adaboost".
MetaLearnerSpec parse_meta_learner(const std::string& text) {
    MetaLearnerSpec spec;
    const std::size_t colon = text.find(':');
    const std::string name = trim(colon == std::string::npos ? text : text.substr(0, colon));
    spec.algorithm = meta_algorithm_from_name(name);
    if (colon != std::string::npos) {
        for (const std::string& raw_pair : split(text.substr(colon + 1), ',')) {
            const std::string pair = trim(raw_pair);
            const std::size_t eq = pair.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ConfigError("bad hyperparameter \"" + pair + "\" in meta spec \"" + text +
                                  "\" (expected key=value)");
            }
            const std::string key = trim(pair.substr(0, eq));
            const std::string value = trim(pair.substr(eq + 1));
            try {
                std::size_t consumed = 0;
                const double parsed = std::stod(value, &consumed);
                if (consumed != value.size()) {
                    throw std::invalid_argument(value);
                }
                spec.hyper[key] = parsed;
            } catch (const std::exception&) {
                throw ConfigError("hyperparameter \"" + key + "\" in meta spec \"" + text +
                                  "\" has non-numeric value \"" + value + "\"");
            }
        }
    }
    return spec;
}

MetaLayerConfig parse_meta_layer(const std::string& text, int bags, int estimators) {
    MetaLayerConfig config;
    config.bags = bags;
    config.estimators = estimators;
    const std::string body = trim(text);
    if (body == "random-forest") {
        config.kind = MetaEnsembleKind::random_forest;
        return config;
    }
    if (body == "extra-trees") {
        config.kind = MetaEnsembleKind::extra_trees;
        return config;
    }
    if (body == "adaboost") {
        config.kind = MetaEnsembleKind::adaboost;
        return config;
    }
    if (body.rfind("bagging(", 0) == 0) {
        if (body.back() != ')') {
            throw ConfigError("unbalanced parentheses in meta spec \"" + text + "\"");
        }
        config.kind = MetaEnsembleKind::bagging;
        config.spec = parse_meta_learner(body.substr(8, body.size() - 9));
        return config;
    }
    config.kind = MetaEnsembleKind::single;
    config.spec = parse_meta_learner(body);
    return config;
}

// The canonical string form of a meta layer (reparses to the same layer).
std::string meta_layer_string(const MetaLayerConfig& config) {
    std::string learner = meta_algorithm_name(config.spec.algorithm);
    if (!config.spec.hyper.empty()) {
        learner += ':';
        bool first = true;
        for (const auto& [key, value] : config.spec.hyper) {
            if (!first) {
                learner += ',';
            }
            learner += key + "=" + machine(value);
            first = false;
        }
    }
    switch (config.kind) {
    case MetaEnsembleKind::single:
        return learner;
    case MetaEnsembleKind::bagging:
        return "bagging(" + learner + ")";
    default:
        return meta_ensemble_kind_name(config.kind);
    }
}

std::vector<int> parse_accuracy_at(const std::string& csv) {
    std::vector<int> values;
    for (const std::string& raw_token : split(csv, ',')) {
        const std::string token = trim(raw_token);
        if (token.empty()) {
            continue;
        }
        try {
            values.push_back(std::stoi(token));
        } catch (const std::exception&) {
            throw ConfigError("bad accuracy@N list \"" + csv + "\"");
        }
    }
    return values;
}

std::string join_ints(const std::vector<int>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            joined += ',';
        }
        joined += std::to_string(values[i]);
    }
    return joined;
}

// Feature presets named after the experimental setups they mirror:
// everything available on fully annotated data, or the closed-class
// subset available when only manual annotations can be trusted.
std::string preset_features(const std::string& preset) {
    if (preset == "surface-en") {
        return "word_1,word_2,lemma_1,lemma_2,char_1,char_2,char_3,fw_1,fw_2,pos_1,pos_2,pos_3";
    }
    if (preset == "annotated-min") {
        return "fw_1,fw_2,pos_1,pos_2,pos_3";
    }
    throw ConfigError("unknown preset \"" + preset +
                      "\" (valid: surface-en, annotated-min)");
}

// ---------------------------------------------------------------------------
// Shared experiment options (fuse / stack / extract share the data plumbing).

struct DataOptions {
    std::string dataset;
    std::string format = "plain";
    std::string features = "word_1,word_2";
    std::string preset;
    std::string fw_list;
    int min_df = 2;
    bool tfidf = false;

    CLI::Option* opt_dataset = nullptr;
    CLI::Option* opt_format = nullptr;
    CLI::Option* opt_features = nullptr;
    CLI::Option* opt_preset = nullptr;
    CLI::Option* opt_fw_list = nullptr;
    CLI::Option* opt_min_df = nullptr;
    CLI::Option* opt_tfidf = nullptr;

    void add_to(CLI::App& app) {
        opt_dataset = app.add_option("--dataset", dataset, "Corpus root directory");
        opt_format = app.add_option("--format", format, "Corpus format: plain | annotated");
        opt_features =
            app.add_option("--features", features,
                           "Comma list of feature specs (word_1, lemma_2, char_3, fw_1, pos_2)");
        opt_preset = app.add_option("--preset", preset,
                                    "Feature preset: surface-en | annotated-min "
                                    "(used when --features is not given)");
        opt_fw_list = app.add_option("--fw-list", fw_list, "Function-word list file");
        opt_min_df = app.add_option("--min-df", min_df,
                                    "Minimum training document frequency per feature");
        opt_tfidf = app.add_flag("--tfidf", tfidf, "Weight features by TF-IDF");
    }

    void overlay(ConfigOverlay& config) {
        config.apply(opt_dataset, "dataset", dataset);
        config.apply(opt_format, "format", format);
        config.apply(opt_features, "features", features);
        config.apply(opt_fw_list, "fw_list", fw_list);
        config.apply_number(opt_min_df, "min_df", min_df);
        config.apply(opt_tfidf, "tfidf", tfidf);
    }

    // Resolves the preset into the feature list; presets are conveniences,
    // the echo always records the expanded list.
    void resolve() {
        if (opt_preset->count() > 0 || !preset.empty()) {
            if (opt_features->count() > 0) {
                throw ConfigError("--features and --preset are mutually exclusive");
            }
            features = preset_features(preset);
        }
        if (dataset.empty()) {
            throw ConfigError("missing --dataset");
        }
    }

    void echo(std::vector<std::pair<std::string, std::string>>& entries) const {
        entries.emplace_back("dataset", dataset);
        entries.emplace_back("format", format);
        entries.emplace_back("features", features);
        entries.emplace_back("fw_list", fw_list);
        entries.emplace_back("min_df", std::to_string(min_df));
        entries.emplace_back("tfidf", tfidf ? "true" : "false");
    }

    Dataset load() const { return load_dataset(dataset, parse_format(format)); }

    std::vector<FeatureSpec> feature_specs() const {
        return parse_feature_list(features, min_df, tfidf, fw_list);
    }
};

// ---------------------------------------------------------------------------
// Report writing shared by fuse and stack.

void write_cv_report(std::ostream& out, const std::string& title, const Dataset& dataset,
                     int folds, std::uint64_t seed, const CrossValidationOutcome& outcome,
                     const std::string& primary_system) {
    out << "# " << title << "\n";
    out << "documents = " << dataset.documents.size() << "\n";
    out << "classes = " << dataset.labels.size() << "\n";
    out << "folds = " << folds << "\n";
    out << "seed = " << seed << "\n";
    out << "\n## accuracy by system\n";
    for (const SystemResult& system : outcome.systems) {
        out << system.name << " = " << fixed6(system.accuracy) << "\n";
    }
    out << "\n## ensemble diagnostics\n";
    out << "oracle = " << fixed6(outcome.oracle_accuracy) << "\n";
    double plurality = -1.0;
    for (const auto& [n, accuracy] : outcome.accuracy_at) {
        out << "accuracy@" << n << " = " << fixed6(accuracy) << "\n";
        if (n == 1) {
            plurality = accuracy;
        }
    }
    if (plurality >= 0.0) {
        out << "oracle_not_below_plurality = "
            << (outcome.oracle_accuracy >= plurality ? "yes" : "no") << "\n";
    }
    out << "\n## " << primary_system << " detail\n";
    const SystemResult& primary = outcome.system(primary_system);
    const EvaluationReport report = confusion_and_metrics(primary.predictions, dataset.labels);
    write_report_text(report, out);
}

// Ensures N=1 is among the reported Accuracy@N values (the plurality
// reference the oracle check compares against), keeps them sorted unique.
std::vector<int> with_plurality_reference(std::vector<int> values) {
    values.push_back(1);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

// ---------------------------------------------------------------------------
// gen-docs

int cmd_gen_docs(const std::string& config_path, std::string pool, std::string format_name_raw,
                 std::string length_preset, std::size_t min_tokens, std::size_t max_tokens,
                 std::uint64_t seed, const std::string& out_dir, CLI::App& app) {
    ConfigOverlay config;
    if (!config_path.empty()) {
        config.load(config_path, "gen-docs");
        config.apply(app.get_option("--pool"), "pool", pool);
        config.apply(app.get_option("--format"), "format", format_name_raw);
        config.apply_number(app.get_option("--min-tokens"), "min_tokens", min_tokens);
        config.apply_number(app.get_option("--max-tokens"), "max_tokens", max_tokens);
        config.apply_number(app.get_option("--seed"), "seed", seed);
        config.finish();
    }
    if (!length_preset.empty()) {
        if (app.get_option("--min-tokens")->count() > 0 ||
            app.get_option("--max-tokens")->count() > 0) {
            throw ConfigError("--length-preset and --min-tokens/--max-tokens are mutually "
                              "exclusive");
        }
        // Conventional symmetric ranges around the two corpus-scale means.
        if (length_preset == "ask") {
            min_tokens = 280;
            max_tokens = 320;
        } else if (length_preset == "jclc") {
            min_tokens = 580;
            max_tokens = 620;
        } else {
            throw ConfigError("unknown length preset \"" + length_preset +
                              "\" (valid: ask, jclc)");
        }
    }
    if (pool.empty()) {
        throw ConfigError("missing --pool sentence-pool directory");
    }
    if (min_tokens == 0 || max_tokens < min_tokens) {
        throw ConfigError("invalid length range [" + std::to_string(min_tokens) + ", " +
                          std::to_string(max_tokens) + "]: need 1 <= min <= max");
    }
    ensure_out_dir(out_dir);

    const CorpusFormat format = parse_format(format_name_raw);
    const SentencePools pools = load_sentence_pools(pool, format);
    const Dataset dataset = generate_artificial_documents(pools, min_tokens, max_tokens, seed);
    write_dataset(dataset, out_dir + "/corpus", format);

    // Per-class generation summary plus the token-conservation accounting.
    std::map<std::string, std::size_t> emitted_tokens;
    std::map<std::string, std::size_t> emitted_docs;
    for (const Document& doc : dataset.documents) {
        emitted_tokens[doc.label] += doc.token_count();
        emitted_docs[doc.label] += 1;
    }
    std::ofstream summary = open_output(out_dir + "/summary.txt");
    summary << "# generated corpus summary\n";
    summary << "range = [" << min_tokens << ", " << max_tokens << "]\n";
    summary << "seed = " << seed << "\n";
    summary << "classes = " << pools.size() << "\n\n";
    summary << "class\tpool_sentences\tpool_tokens\tdocuments\temitted_tokens\tmean_tokens\t"
               "discarded_tokens\n";
    std::size_t total_docs = 0;
    std::size_t total_emitted = 0;
    std::size_t total_pool = 0;
    for (const auto& [label, sentences] : pools) {
        std::size_t pool_tokens = 0;
        for (const Sentence& sentence : sentences) {
            pool_tokens += sentence.size();
        }
        const std::size_t docs = emitted_docs.count(label) ? emitted_docs[label] : 0;
        const std::size_t tokens = emitted_tokens.count(label) ? emitted_tokens[label] : 0;
        const double mean = docs > 0 ? static_cast<double>(tokens) / static_cast<double>(docs)
                                     : 0.0;
        summary << label << "\t" << sentences.size() << "\t" << pool_tokens << "\t" << docs
                << "\t" << tokens << "\t" << fixed2(mean) << "\t" << (pool_tokens - tokens)
                << "\n";
        total_docs += docs;
        total_emitted += tokens;
        total_pool += pool_tokens;
    }
    summary << "\ntotal_documents = " << total_docs << "\n";
    summary << "total_emitted_tokens = " << total_emitted << "\n";
    summary << "total_discarded_tokens = " << (total_pool - total_emitted) << "\n";

    std::vector<std::pair<std::string, std::string>> entries;
    entries.emplace_back("pool", pool);
    entries.emplace_back("format", format_name_raw);
    entries.emplace_back("min_tokens", std::to_string(min_tokens));
    entries.emplace_back("max_tokens", std::to_string(max_tokens));
    entries.emplace_back("seed", std::to_string(seed));
    write_echo(out_dir, "gen-docs", entries);

    std::cout << "generated " << total_docs << " documents in " << out_dir << "/corpus\n";
    return 0;
}

// ---------------------------------------------------------------------------
// extract

int cmd_extract(const std::string& config_path, DataOptions& data, const std::string& out_dir) {
    ConfigOverlay config;
    if (!config_path.empty()) {
        config.load(config_path, "extract");
        data.overlay(config);
        config.finish();
    }
    data.resolve();
    ensure_out_dir(out_dir);

    const Dataset dataset = data.load();
    const std::vector<FeatureSpec> specs = data.feature_specs();
    std::vector<BaseClassifierSpec> base_specs = build_base_specs(specs, 1.0);
    validate_base_specs(base_specs, dataset);

    for (const FeatureSpec& spec : specs) {
        const FeatureSpace space = fit_space(dataset.documents, spec);
        std::ofstream out = open_output(out_dir + "/features_" + spec.name() + ".tsv");
        dump_space(space, out);
        std::cout << spec.name() << ": " << space.dimension() << " features\n";
    }

    std::vector<std::pair<std::string, std::string>> entries;
    data.echo(entries);
    write_echo(out_dir, "extract", entries);
    return 0;
}

// ---------------------------------------------------------------------------
// fuse

int cmd_fuse(const std::string& config_path, DataOptions& data, std::string combiner_csv,
             double svm_c, int folds, std::uint64_t seed, std::string accuracy_at_csv,
             bool dump_profile_rows, int jobs, const std::string& out_dir, CLI::App& app) {
    ConfigOverlay config;
    if (!config_path.empty()) {
        config.load(config_path, "fuse");
        data.overlay(config);
        config.apply(app.get_option("--combiner"), "combiner", combiner_csv);
        config.apply_number(app.get_option("--svm-c"), "svm_c", svm_c);
        config.apply_number(app.get_option("--folds"), "folds", folds);
        config.apply_number(app.get_option("--seed"), "seed", seed);
        config.apply(app.get_option("--accuracy-at"), "accuracy_at", accuracy_at_csv);
        config.apply(app.get_option("--dump-profiles"), "dump_profiles", dump_profile_rows);
        config.finish();
    }
    data.resolve();
    ensure_out_dir(out_dir);

    PipelineConfig pipeline;
    pipeline.base_specs = build_base_specs(data.feature_specs(), svm_c);
    std::vector<std::string> combiner_names;
    for (const std::string& raw_name : split(combiner_csv, ',')) {
        const std::string name = trim(raw_name);
        if (name.empty()) {
            continue;
        }
        pipeline.combiners.push_back(combiner_from_name(name));
        combiner_names.push_back(name);
    }
    if (pipeline.combiners.empty()) {
        throw ConfigError("no combiner named (--combiner)");
    }
    pipeline.accuracy_at = with_plurality_reference(parse_accuracy_at(accuracy_at_csv));
    pipeline.jobs = jobs;
    pipeline.keep_profiles = dump_profile_rows;

    const Dataset dataset = data.load();
    const CrossValidationOutcome outcome = cross_validate(pipeline, dataset, folds, seed);

    const std::string primary = "combiner:" + combiner_names.front();
    std::ofstream report = open_output(out_dir + "/report.txt");
    write_cv_report(report, "ensemble fusion report", dataset, folds, seed, outcome, primary);
    export_predictions(outcome.system(primary).predictions, out_dir + "/predictions.csv");
    if (dump_profile_rows) {
        std::ofstream profile_out = open_output(out_dir + "/profiles.tsv");
        dump_profiles(profile_out, outcome.base_names, dataset.labels, outcome.doc_ids,
                      outcome.profiles);
    }

    std::vector<std::pair<std::string, std::string>> entries;
    data.echo(entries);
    entries.emplace_back("svm_c", machine(svm_c));
    entries.emplace_back("combiner", combiner_csv);
    entries.emplace_back("folds", std::to_string(folds));
    entries.emplace_back("seed", std::to_string(seed));
    entries.emplace_back("accuracy_at", accuracy_at_csv);
    entries.emplace_back("dump_profiles", dump_profile_rows ? "true" : "false");
    write_echo(out_dir, "fuse", entries);

    std::cout << primary << " accuracy = " << fixed6(outcome.system(primary).accuracy) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// stack

int cmd_stack(const std::string& config_path, DataOptions& data, std::string meta_string,
              std::string encoding_name_raw, double svm_c, int folds, int inner_folds, int bags,
              int estimators, std::uint64_t seed, std::string accuracy_at_csv,
              bool dump_profile_rows, bool save_model, int jobs, const std::string& out_dir,
              CLI::App& app) {
    ConfigOverlay config;
    if (!config_path.empty()) {
        config.load(config_path, "stack");
        data.overlay(config);
        config.apply(app.get_option("--meta"), "meta", meta_string);
        config.apply(app.get_option("--encoding"), "encoding", encoding_name_raw);
        config.apply_number(app.get_option("--svm-c"), "svm_c", svm_c);
        config.apply_number(app.get_option("--folds"), "folds", folds);
        config.apply_number(app.get_option("--inner-folds"), "inner_folds", inner_folds);
        config.apply_number(app.get_option("--bags"), "bags", bags);
        config.apply_number(app.get_option("--estimators"), "estimators", estimators);
        config.apply_number(app.get_option("--seed"), "seed", seed);
        config.apply(app.get_option("--accuracy-at"), "accuracy_at", accuracy_at_csv);
        config.apply(app.get_option("--dump-profiles"), "dump_profiles", dump_profile_rows);
        config.apply(app.get_option("--save-model"), "save_model", save_model);
        config.finish();
    }
    data.resolve();
    ensure_out_dir(out_dir);

    PipelineConfig pipeline;
    pipeline.base_specs = build_base_specs(data.feature_specs(), svm_c);
    pipeline.stacked = true;
    pipeline.meta = parse_meta_layer(meta_string, bags, estimators);
    pipeline.encoding = encoding_from_name(encoding_name_raw);
    pipeline.inner_folds = inner_folds;
    pipeline.accuracy_at = with_plurality_reference(parse_accuracy_at(accuracy_at_csv));
    pipeline.jobs = jobs;
    pipeline.keep_profiles = true; // meta-feature export reads the profiles

    const Dataset dataset = data.load();
    const CrossValidationOutcome outcome = cross_validate(pipeline, dataset, folds, seed);

    const std::string primary = "stacked:" + meta_layer_label(pipeline.meta);
    std::ofstream report = open_output(out_dir + "/report.txt");
    write_cv_report(report, "stacked generalization report", dataset, folds, seed, outcome,
                    primary);
    export_predictions(outcome.system(primary).predictions, out_dir + "/predictions.csv");

    // Out-of-fold meta-features over the outer folds, the matrix a
    // meta-learner trained on this corpus would see.
    MetaFeatureMatrix features;
    features.encoding = pipeline.encoding;
    features.base_names = outcome.base_names;
    features.labels = dataset.labels;
    features.truth = outcome.truth;
    features.doc_ids = outcome.doc_ids;
    const int base_count = static_cast<int>(outcome.base_names.size());
    const int class_count = static_cast<int>(dataset.labels.size());
    features.Z.resize(static_cast<Eigen::Index>(outcome.profiles.size()),
                      static_cast<Eigen::Index>(base_count * class_count));
    for (std::size_t i = 0; i < outcome.profiles.size(); ++i) {
        std::vector<double> row;
        if (pipeline.encoding == Encoding::discrete_onehot) {
            std::vector<int> predicted;
            for (const std::vector<double>& scores : outcome.profiles[i].rows) {
                predicted.push_back(argmax(scores));
            }
            row = encode_discrete(predicted, class_count);
        } else {
            row = encode_continuous(outcome.profiles[i]);
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            features.Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
    }
    std::ofstream meta_out = open_output(out_dir + "/meta_features.csv");
    export_meta_features(features, meta_out);

    if (dump_profile_rows) {
        std::ofstream profile_out = open_output(out_dir + "/profiles.tsv");
        dump_profiles(profile_out, outcome.base_names, dataset.labels, outcome.doc_ids,
                      outcome.profiles);
    }

    if (save_model) {
        // A deployable model trained on the full dataset (the CV above
        // estimates how well this model generalizes).
        const std::uint64_t model_seed = mix_seed(seed, 0x6d6f64656cULL);
        const FoldAssignment meta_folds =
            stratified_folds(dataset, inner_folds, mix_seed(model_seed, 0x666f6c6473ULL));
        const StackedModel model = train_stacked(pipeline.meta, pipeline.base_specs, dataset,
                                                 meta_folds, pipeline.encoding, model_seed, jobs);
        save_stacked_model(model, out_dir + "/model.json");
    }

    std::vector<std::pair<std::string, std::string>> entries;
    data.echo(entries);
    entries.emplace_back("svm_c", machine(svm_c));
    entries.emplace_back("meta", meta_string);
    entries.emplace_back("encoding", encoding_name_raw);
    entries.emplace_back("folds", std::to_string(folds));
    entries.emplace_back("inner_folds", std::to_string(inner_folds));
    entries.emplace_back("bags", std::to_string(bags));
    entries.emplace_back("estimators", std::to_string(estimators));
    entries.emplace_back("seed", std::to_string(seed));
    entries.emplace_back("accuracy_at", accuracy_at_csv);
    entries.emplace_back("dump_profiles", dump_profile_rows ? "true" : "false");
    entries.emplace_back("save_model", save_model ? "true" : "false");
    write_echo(out_dir, "stack", entries);

    std::cout << primary << " accuracy = " << fixed6(outcome.system(primary).accuracy) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// mcnemar

std::string mcnemar_text(const McNemarResult& result) {
    std::ostringstream out;
    out << "contingency table (rows/columns = system a/b correct)\n";
    out << "both_correct = " << result.table.n11 << "\n";
    out << "a_only_correct = " << result.table.n10 << "\n";
    out << "b_only_correct = " << result.table.n01 << "\n";
    out << "both_incorrect = " << result.table.n00 << "\n";
    out << "chi = " << fixed6(result.chi) << "\n";
    out << "p = " << fixed6(result.p) << "\n";
    if (result.no_discordance) {
        out << "note = systems never disagree on correctness (no discordant pairs); p fixed "
               "at 1\n";
    }
    return out.str();
}

int cmd_mcnemar(const std::string& config_path, std::string pred_a, std::string pred_b,
                const std::string& out_dir, CLI::App& app) {
    ConfigOverlay config;
    if (!config_path.empty()) {
        config.load(config_path, "mcnemar");
        config.apply(app.get_option("pred_a"), "pred_a", pred_a);
        config.apply(app.get_option("pred_b"), "pred_b", pred_b);
        config.finish();
    }
    if (pred_a.empty() || pred_b.empty()) {
        throw ConfigError("mcnemar needs two prediction files (pred_a pred_b)");
    }

    const PredictionSet a = import_predictions(pred_a);
    const PredictionSet b = import_predictions(pred_b);
    const McNemarResult result = mcnemar(a, b);
    const std::string text = mcnemar_text(result);
    std::cout << text;

    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        std::ofstream out = open_output(out_dir + "/mcnemar.txt");
        out << text;
        std::vector<std::pair<std::string, std::string>> entries;
        entries.emplace_back("pred_a", pred_a);
        entries.emplace_back("pred_b", pred_b);
        write_echo(out_dir, "mcnemar", entries);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& config_path, std::string predictions_path,
             const std::string& out_dir, CLI::App& app) {
    ConfigOverlay config;
    if (!config_path.empty()) {
        config.load(config_path, "eval");
        config.apply(app.get_option("--predictions"), "predictions", predictions_path);
        config.finish();
    }
    if (predictions_path.empty()) {
        throw ConfigError("missing --predictions file");
    }

    const PredictionSet predictions = import_predictions(predictions_path);
    std::set<std::string> label_set;
    for (const PredictionEntry& entry : predictions.entries) {
        label_set.insert(entry.truth);
        label_set.insert(entry.predicted);
    }
    const std::vector<std::string> labels(label_set.begin(), label_set.end());
    const EvaluationReport report = confusion_and_metrics(predictions, labels);

    std::ostringstream text;
    write_report_text(report, text);
    std::cout << text.str();

    if (!out_dir.empty()) {
        ensure_out_dir(out_dir);
        std::ofstream out = open_output(out_dir + "/report.txt");
        out << text.str();
        std::vector<std::pair<std::string, std::string>> entries;
        entries.emplace_back("predictions", predictions_path);
        write_echo(out_dir, "eval", entries);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nlistack: ensemble and stacked text classification experiments"};
    app.require_subcommand(1);

    // gen-docs ------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-docs",
                                   "Generate artificial documents from sentence pools");
    std::string gen_config, gen_pool, gen_format = "plain", gen_preset, gen_out;
    std::size_t gen_min = 0, gen_max = 0;
    std::uint64_t gen_seed = 42;
    gen->add_option("--config", gen_config, "Load settings from a run_config.cfg echo");
    gen->add_option("--pool", gen_pool, "Sentence pool directory (<class>.txt|.tok per class)");
    gen->add_option("--format", gen_format, "Pool format: plain | annotated");
    gen->add_option("--min-tokens", gen_min, "Lower bound of the target length range");
    gen->add_option("--max-tokens", gen_max, "Upper bound of the target length range");
    gen->add_option("--length-preset", gen_preset,
                    "Conventional range preset: ask [280,320] | jclc [580,620]");
    gen->add_option("--seed", gen_seed, "Master seed");
    gen->add_option("--out", gen_out, "Output directory");

    // extract --------------------------------------------------------------
    auto* extract = app.add_subcommand("extract", "Fit feature spaces and dump vocabularies");
    std::string extract_config, extract_out;
    DataOptions extract_data;
    extract->add_option("--config", extract_config, "Load settings from a run_config.cfg echo");
    extract_data.add_to(*extract);
    extract->add_option("--out", extract_out, "Output directory");

    // fuse -----------------------------------------------------------------
    auto* fuse = app.add_subcommand("fuse",
                                    "Cross-validate base classifiers and fusion combiners");
    std::string fuse_config, fuse_combiner = "mean", fuse_accuracy_at = "2,3", fuse_out;
    DataOptions fuse_data;
    double fuse_svm_c = 1.0;
    int fuse_folds = 10, fuse_jobs = 1;
    std::uint64_t fuse_seed = 42;
    bool fuse_dump_profiles = false;
    fuse->add_option("--config", fuse_config, "Load settings from a run_config.cfg echo");
    fuse_data.add_to(*fuse);
    fuse->add_option("--combiner", fuse_combiner,
                     "Comma list of combiners (plurality, mean, median, product, "
                     "highest-confidence, borda); the first is the primary system");
    fuse->add_option("--svm-c", fuse_svm_c, "Base learner regularization parameter C");
    fuse->add_option("--folds", fuse_folds, "Cross-validation folds");
    fuse->add_option("--seed", fuse_seed, "Master seed");
    fuse->add_option("--accuracy-at", fuse_accuracy_at, "Accuracy@N diagnostics to report");
    fuse->add_flag("--dump-profiles", fuse_dump_profiles, "Write decision profiles (profiles.tsv)");
    fuse->add_option("--jobs", fuse_jobs, "Worker threads (never affects results)");
    fuse->add_option("--out", fuse_out, "Output directory");

    // stack ----------------------------------------------------------------
    auto* stack = app.add_subcommand("stack",
                                     "Cross-validate a stacked (meta-classifier) system");
    std::string stack_config, stack_meta = "lda", stack_encoding = "continuous";
    std::string stack_accuracy_at = "2,3", stack_out;
    DataOptions stack_data;
    double stack_svm_c = 1.0;
    int stack_folds = 10, stack_inner = 10, stack_bags = 25, stack_estimators = 100,
        stack_jobs = 1;
    std::uint64_t stack_seed = 42;
    bool stack_dump_profiles = false;
    bool stack_save_model = false;
    stack->add_option("--config", stack_config, "Load settings from a run_config.cfg echo");
    stack_data.add_to(*stack);
    stack->add_option("--meta", stack_meta,
                      "Meta layer: svm|logistic|ridge|perceptron|tree|lda|qda|knn|centroid "
                      "(with optional :key=value,... hyperparameters), bagging(<learner>), "
                      "random-forest, extra-trees, adaboost");
    stack->add_option("--encoding", stack_encoding, "Meta-feature encoding: discrete | continuous");
    stack->add_option("--svm-c", stack_svm_c, "Base learner regularization parameter C");
    stack->add_option("--folds", stack_folds, "Outer cross-validation folds");
    stack->add_option("--inner-folds", stack_inner, "Inner folds for meta-feature generation");
    stack->add_option("--bags", stack_bags, "Bootstrap replicates for bagging meta-ensembles");
    stack->add_option("--estimators", stack_estimators,
                      "Trees for random-forest / extra-trees / adaboost meta-ensembles");
    stack->add_option("--seed", stack_seed, "Master seed");
    stack->add_option("--accuracy-at", stack_accuracy_at, "Accuracy@N diagnostics to report");
    stack->add_flag("--dump-profiles", stack_dump_profiles,
                    "Write decision profiles (profiles.tsv)");
    stack->add_flag("--save-model", stack_save_model,
                    "Also train on the full dataset and write model.json");
    stack->add_option("--jobs", stack_jobs, "Worker threads (never affects results)");
    stack->add_option("--out", stack_out, "Output directory");

    // mcnemar ----------------------------------------------------------------
    auto* mcn = app.add_subcommand("mcnemar",
                                   "McNemar significance test between two prediction files");
    std::string mcn_config, mcn_a, mcn_b, mcn_out;
    mcn->add_option("--config", mcn_config, "Load settings from a run_config.cfg echo");
    mcn->add_option("pred_a", mcn_a, "First system's predictions.csv");
    mcn->add_option("pred_b", mcn_b, "Second system's predictions.csv");
    mcn->add_option("--out", mcn_out, "Optional output directory (mcnemar.txt)");

    // eval -------------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Evaluate a predictions file");
    std::string eval_config, eval_predictions, eval_out;
    eval->add_option("--config", eval_config, "Load settings from a run_config.cfg echo");
    eval->add_option("--predictions", eval_predictions, "predictions.csv to evaluate");
    eval->add_option("--out", eval_out, "Optional output directory (report.txt)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& error) {
        app.exit(error);
        return 1; // usage error, regardless of CLI11's own code
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_docs(gen_config, gen_pool, gen_format, gen_preset, gen_min, gen_max,
                                gen_seed, gen_out, *gen);
        }
        if (extract->parsed()) {
            return cmd_extract(extract_config, extract_data, extract_out);
        }
        if (fuse->parsed()) {
            return cmd_fuse(fuse_config, fuse_data, fuse_combiner, fuse_svm_c, fuse_folds,
                            fuse_seed, fuse_accuracy_at, fuse_dump_profiles, fuse_jobs, fuse_out,
                            *fuse);
        }
        if (stack->parsed()) {
            return cmd_stack(stack_config, stack_data, stack_meta, stack_encoding, stack_svm_c,
                             stack_folds, stack_inner, stack_bags, stack_estimators, stack_seed,
                             stack_accuracy_at, stack_dump_profiles, stack_save_model, stack_jobs,
                             stack_out, *stack);
        }
        if (mcn->parsed()) {
            return cmd_mcnemar(mcn_config, mcn_a, mcn_b, mcn_out, *mcn);
        }
        if (eval->parsed()) {
            return cmd_eval(eval_config, eval_predictions, eval_out, *eval);
        }
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const ConfigError& error) {
        std::cerr << "configuration error: " << error.what() << "\n";
        return 1;
    } catch (const DataError& error) {
        std::cerr << "data error: " << error.what() << "\n";
        return 2;
    } catch (const NumericError& error) {
        std::cerr << "numerical failure: " << error.what() << "\n";
        return 3;
    }
}
