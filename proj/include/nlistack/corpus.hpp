#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace nlistack {

// One token of learner text.  lemma/pos are empty strings when the
// annotation layer is absent (plain-text corpora have neither).
struct Token {
    std::string surface;
    std::string lemma;
    std::string pos;
};

using Sentence = std::vector<Token>;

struct Document {
    std::string id;
    std::string label;
    std::vector<Sentence> sentences;

    std::size_t token_count() const {
        std::size_t n = 0;
        for (const auto& s : sentences) n += s.size();
        return n;
    }
};

struct Dataset {
    std::vector<Document> documents;
    std::vector<std::string> labels; // sorted lexicographically, distinct

    // Index of a label in labels, or -1 if unknown.
    int label_index(const std::string& label) const;
    bool has_lemmas() const;
    bool has_pos() const;
};

enum class CorpusFormat { plain, annotated };

// Stratified fold assignment: every document id maps to a fold in [0,k).
struct FoldAssignment {
    int k = 0;
    std::unordered_map<std::string, int> assignment;

    int fold_of(const std::string& doc_id) const;
};

// Tokenizes raw text: split on whitespace, then peel leading/trailing ASCII
// punctuation off each chunk into separate tokens.  Sentences end after a
// "." / "!" / "?" token or at a line break.  Exposed for direct testing.
std::vector<Sentence> tokenize_plain(const std::string& text);

// Loads root/<class>/<docid>.{txt|tok}.  Class directories become labels
// (sorted); documents are sorted by id within each class.
Dataset load_dataset(const std::string& root_path, CorpusFormat format);

// Sentence pools keyed by class name, used by artificial-document
// generation.  File layout: pool_dir/<class>.txt with one sentence per line
// (plain) or pool_dir/<class>.tok with one token per line and blank-line
// sentence separators (annotated).
using SentencePools = std::map<std::string, std::vector<Sentence>>;
SentencePools load_sentence_pools(const std::string& pool_dir, CorpusFormat format);

// Synthesizes documents from sentence pools: per document, draw a target
// length uniformly in [min_tokens, max_tokens], then consume sentences
// (sampled without replacement) until the target is reached.  Generation
// for a class stops when the remaining pool cannot reach the drawn target;
// the remainder is discarded.  The final document may exceed max_tokens.
Dataset generate_artificial_documents(const SentencePools& pools,
                                      std::size_t min_tokens,
                                      std::size_t max_tokens,
                                      std::uint64_t seed);

// Per class: shuffle the class's documents with a seed-derived stream and
// deal them round-robin over k folds, so per-class fold sizes differ by at
// most one.
FoldAssignment stratified_folds(const Dataset& dataset, int k, std::uint64_t seed);

// Writes a dataset in the directory layout load_dataset expects.  Plain
// documents are written one sentence per line; annotated documents one
// token per line with blank-line sentence separators.
void write_dataset(const Dataset& dataset, const std::string& out_dir, CorpusFormat format);

} // namespace nlistack
