#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nlistack/corpus.hpp"

namespace nlistack {

enum class FeatureType { word_ngram, lemma_ngram, char_ngram, funcword_ngram, pos_ngram };

const char* feature_type_name(FeatureType type);
FeatureType feature_type_from_name(const std::string& name);

// Closed-class word list for stylometric function-word features.
struct FunctionWordList {
    std::unordered_set<std::string> words; // lowercase
};

// File format: one lowercase word per line, '#' starts a comment.
FunctionWordList load_function_words(const std::string& path);

// A single feature configuration.  function_words is consulted only when
// type == funcword_ngram (the list travels with the spec so that fitted
// spaces can vectorize unseen documents and be serialized).
struct FeatureSpec {
    FeatureType type = FeatureType::word_ngram;
    int n = 1;
    int min_df = 2;
    bool tfidf = false;
    FunctionWordList function_words;

    // Canonical short name, e.g. "word_2", "char_3", "fw_1", "pos_3".
    std::string name() const;
};

struct SparseVector {
    std::vector<std::pair<int, double>> entries; // strictly increasing indices, values > 0
    int dimension = 0;
};

// A vocabulary fitted on a training partition.  Columns are assigned in
// lexicographic feature order; train_frequency records each feature's
// training document frequency (the quantity min_df prunes on).
struct FeatureSpace {
    FeatureSpec spec;
    std::vector<std::string> feature_names;
    std::unordered_map<std::string, int> vocabulary;
    std::vector<int> train_frequency;
    std::vector<double> idf; // per column; empty unless spec.tfidf

    int dimension() const { return static_cast<int>(feature_names.size()); }
};

// Extraction results are count maps (multisets); std::map keeps iteration
// deterministic for tests and dumps.
using FeatureCounts = std::map<std::string, int>;

enum class WordUnit { surface, lemma };

// n in 1..2; n-grams within sentences; surfaces/lemmas lowercased; joined "_".
FeatureCounts extract_word_ngrams(const Document& doc, int n, WordUnit unit);
// n in 1..3; n-grams over each token's Unicode code points, lowercased.
FeatureCounts extract_char_ngrams(const Document& doc, int n);
// n in 1..2; each sentence is first projected to its in-list tokens.
FeatureCounts extract_function_word_ngrams(const Document& doc, const FunctionWordList& fw, int n);
// n in 1..3 (order 4+ is rejected); tag sequences within sentences.
FeatureCounts extract_pos_ngrams(const Document& doc, int n);
// Dispatch on spec.type.
FeatureCounts extract_features(const Document& doc, const FeatureSpec& spec);

// Fits a vocabulary over the given documents (or a subset of them):
// features with training document frequency >= spec.min_df, columns in
// lexicographic order.
FeatureSpace fit_space(const std::vector<Document>& train_docs, const FeatureSpec& spec);
FeatureSpace fit_space(const std::vector<Document>& docs, const std::vector<int>& train_indices,
                       const FeatureSpec& spec);

// Counts of in-vocabulary features (TF-IDF weighted if the space says so),
// L2-normalized; documents with no in-vocabulary features map to the zero
// vector.
SparseVector vectorize(const Document& doc, const FeatureSpace& space);

// Inspection dump: "index<TAB>feature<TAB>train_frequency" per line.
void dump_space(const FeatureSpace& space, std::ostream& out);

// ---------------------------------------------------------------------------
// Indexed fast path.  Cross-validation refits spaces on many overlapping
// subsets of the same documents; extracting features once per document and
// refitting over integer ids avoids re-hashing feature strings in every fold.
// fit/vectorize through this path are exactly equivalent to the plain path.

struct ExtractedCorpus {
    FeatureSpec spec;
    std::vector<std::string> feature_names;                 // global id -> string
    std::vector<std::vector<std::pair<int, int>>> counts;   // per doc: (global id, count), id-sorted
};

ExtractedCorpus extract_corpus(const std::vector<Document>& docs, const FeatureSpec& spec);

struct SpaceIndex {
    FeatureSpace space;
    std::vector<int> column_of_global; // global feature id -> column, -1 if pruned
};

SpaceIndex fit_space_indexed(const ExtractedCorpus& corpus, const std::vector<int>& train_indices);
SparseVector vectorize_indexed(const ExtractedCorpus& corpus, int doc_index, const SpaceIndex& index);

} // namespace nlistack
