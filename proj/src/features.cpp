#include "nlistack/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nlistack/error.hpp"

namespace nlistack {

namespace {

std::string ascii_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

// Splits a UTF-8 string into code points.  A malformed byte is passed
// through as a single unit rather than aborting extraction.
std::vector<std::string> utf8_units(const std::string& s) {
    std::vector<std::string> units;
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char b = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((b & 0x80u) == 0x00u) len = 1;
        else if ((b & 0xE0u) == 0xC0u) len = 2;
        else if ((b & 0xF0u) == 0xE0u) len = 3;
        else if ((b & 0xF8u) == 0xF0u) len = 4;
        if (i + len > s.size()) len = 1;
        for (std::size_t j = 1; j < len; ++j) {
            if ((static_cast<unsigned char>(s[i + j]) & 0xC0u) != 0x80u) {
                len = 1;
                break;
            }
        }
        units.push_back(s.substr(i, len));
        i += len;
    }
    return units;
}

void check_order(int n, int lo, int hi, const char* what) {
    if (n < lo || n > hi)
        throw ConfigError(std::string(what) + " order must be in " + std::to_string(lo) + ".." +
                          std::to_string(hi) + ", got " + std::to_string(n));
}

void add_ngrams(const std::vector<std::string>& seq, int n, FeatureCounts& out) {
    if (static_cast<int>(seq.size()) < n) return;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        std::string f = seq[i];
        for (int j = 1; j < n; ++j) {
            f += '_';
            f += seq[i + j];
        }
        ++out[f];
    }
}

} // namespace

const char* feature_type_name(FeatureType type) {
    switch (type) {
        case FeatureType::word_ngram: return "word";
        case FeatureType::lemma_ngram: return "lemma";
        case FeatureType::char_ngram: return "char";
        case FeatureType::funcword_ngram: return "fw";
        case FeatureType::pos_ngram: return "pos";
    }
    return "?";
}

FeatureType feature_type_from_name(const std::string& name) {
    if (name == "word") return FeatureType::word_ngram;
    if (name == "lemma") return FeatureType::lemma_ngram;
    if (name == "char") return FeatureType::char_ngram;
    if (name == "fw") return FeatureType::funcword_ngram;
    if (name == "pos") return FeatureType::pos_ngram;
    throw ConfigError("unknown feature type '" + name + "' (expected word, lemma, char, fw, pos)");
}

std::string FeatureSpec::name() const {
    return std::string(feature_type_name(type)) + "_" + std::to_string(n);
}

FunctionWordList load_function_words(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open function-word list: " + path);
    FunctionWordList fw;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream trim(line);
        std::string word;
        if (trim >> word) fw.words.insert(ascii_lower(word));
    }
    if (fw.words.empty()) throw DataError("function-word list is empty: " + path);
    return fw;
}

FeatureCounts extract_word_ngrams(const Document& doc, int n, WordUnit unit) {
    check_order(n, 1, 2, "word n-gram");
    FeatureCounts out;
    std::vector<std::string> seq;
    for (const auto& sentence : doc.sentences) {
        seq.clear();
        for (const auto& tok : sentence) {
            if (unit == WordUnit::lemma) {
                if (tok.lemma.empty())
                    throw DataError("lemma n-grams requested but token '" + tok.surface +
                                    "' of document " + doc.id + " has no lemma");
                seq.push_back(ascii_lower(tok.lemma));
            } else {
                seq.push_back(ascii_lower(tok.surface));
            }
        }
        add_ngrams(seq, n, out);
    }
    return out;
}

FeatureCounts extract_char_ngrams(const Document& doc, int n) {
    check_order(n, 1, 3, "character n-gram");
    FeatureCounts out;
    for (const auto& sentence : doc.sentences) {
        for (const auto& tok : sentence) {
            const auto units = utf8_units(ascii_lower(tok.surface));
            if (static_cast<int>(units.size()) < n) continue;
            for (std::size_t i = 0; i + n <= units.size(); ++i) {
                std::string f;
                for (int j = 0; j < n; ++j) f += units[i + j];
                ++out[f];
            }
        }
    }
    return out;
}

FeatureCounts extract_function_word_ngrams(const Document& doc, const FunctionWordList& fw, int n) {
    check_order(n, 1, 2, "function-word n-gram");
    if (fw.words.empty()) throw ConfigError("function-word list is empty");
    FeatureCounts out;
    std::vector<std::string> projected;
    for (const auto& sentence : doc.sentences) {
        projected.clear();
        for (const auto& tok : sentence) {
            std::string low = ascii_lower(tok.surface);
            if (fw.words.count(low)) projected.push_back(std::move(low));
        }
        add_ngrams(projected, n, out);
    }
    return out;
}

FeatureCounts extract_pos_ngrams(const Document& doc, int n) {
    check_order(n, 1, 3, "POS n-gram");
    FeatureCounts out;
    std::vector<std::string> seq;
    for (const auto& sentence : doc.sentences) {
        seq.clear();
        for (const auto& tok : sentence) {
            if (tok.pos.empty())
                throw DataError("POS n-grams requested but token '" + tok.surface +
                                "' of document " + doc.id + " has no POS tag");
            seq.push_back(tok.pos);
        }
        add_ngrams(seq, n, out);
    }
    return out;
}

FeatureCounts extract_features(const Document& doc, const FeatureSpec& spec) {
    switch (spec.type) {
        case FeatureType::word_ngram: return extract_word_ngrams(doc, spec.n, WordUnit::surface);
        case FeatureType::lemma_ngram: return extract_word_ngrams(doc, spec.n, WordUnit::lemma);
        case FeatureType::char_ngram: return extract_char_ngrams(doc, spec.n);
        case FeatureType::funcword_ngram:
            return extract_function_word_ngrams(doc, spec.function_words, spec.n);
        case FeatureType::pos_ngram: return extract_pos_ngrams(doc, spec.n);
    }
    throw ConfigError("unknown feature type");
}

ExtractedCorpus extract_corpus(const std::vector<Document>& docs, const FeatureSpec& spec) {
    ExtractedCorpus corpus;
    corpus.spec = spec;
    corpus.counts.resize(docs.size());
    std::unordered_map<std::string, int> ids;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const FeatureCounts counts = extract_features(docs[d], spec);
        auto& row = corpus.counts[d];
        row.reserve(counts.size());
        for (const auto& [feature, count] : counts) {
            auto [it, inserted] = ids.emplace(feature, static_cast<int>(corpus.feature_names.size()));
            if (inserted) corpus.feature_names.push_back(feature);
            row.emplace_back(it->second, count);
        }
        std::sort(row.begin(), row.end());
    }
    return corpus;
}

SpaceIndex fit_space_indexed(const ExtractedCorpus& corpus, const std::vector<int>& train_indices) {
    const std::size_t n_features = corpus.feature_names.size();
    std::vector<int> df(n_features, 0);
    for (const int d : train_indices)
        for (const auto& [gid, count] : corpus.counts[d]) ++df[gid];

    // Columns in lexicographic feature order.
    std::vector<int> kept;
    for (std::size_t g = 0; g < n_features; ++g)
        if (df[g] >= corpus.spec.min_df) kept.push_back(static_cast<int>(g));
    std::sort(kept.begin(), kept.end(), [&](int a, int b) {
        return corpus.feature_names[a] < corpus.feature_names[b];
    });
    if (kept.empty())
        throw DataError("feature space '" + corpus.spec.name() +
                        "' is empty after the min_df=" + std::to_string(corpus.spec.min_df) +
                        " frequency floor");

    SpaceIndex index;
    index.space.spec = corpus.spec;
    index.column_of_global.assign(n_features, -1);
    for (std::size_t col = 0; col < kept.size(); ++col) {
        const int gid = kept[col];
        index.column_of_global[gid] = static_cast<int>(col);
        index.space.feature_names.push_back(corpus.feature_names[gid]);
        index.space.vocabulary.emplace(corpus.feature_names[gid], static_cast<int>(col));
        index.space.train_frequency.push_back(df[gid]);
    }
    if (corpus.spec.tfidf) {
        const double n_train = static_cast<double>(train_indices.size());
        index.space.idf.resize(kept.size());
        for (std::size_t col = 0; col < kept.size(); ++col)
            index.space.idf[col] =
                std::log((1.0 + n_train) / (1.0 + index.space.train_frequency[col])) + 1.0;
    }
    return index;
}

namespace {

void l2_normalize(SparseVector& v) {
    double norm2 = 0.0;
    for (const auto& [idx, val] : v.entries) norm2 += val * val;
    if (norm2 <= 0.0) return; // no in-vocabulary features: zero vector
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& [idx, val] : v.entries) val *= inv;
}

} // namespace

SparseVector vectorize_indexed(const ExtractedCorpus& corpus, int doc_index,
                               const SpaceIndex& index) {
    SparseVector v;
    v.dimension = index.space.dimension();
    std::vector<std::pair<int, double>> entries;
    for (const auto& [gid, count] : corpus.counts[doc_index]) {
        const int col = index.column_of_global[gid];
        if (col < 0) continue;
        double value = static_cast<double>(count);
        if (!index.space.idf.empty()) value *= index.space.idf[col];
        entries.emplace_back(col, value);
    }
    std::sort(entries.begin(), entries.end());
    v.entries = std::move(entries);
    l2_normalize(v);
    return v;
}

FeatureSpace fit_space(const std::vector<Document>& docs, const std::vector<int>& train_indices,
                       const FeatureSpec& spec) {
    const ExtractedCorpus corpus = extract_corpus(docs, spec);
    return fit_space_indexed(corpus, train_indices).space;
}

FeatureSpace fit_space(const std::vector<Document>& train_docs, const FeatureSpec& spec) {
    std::vector<int> all(train_docs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return fit_space(train_docs, all, spec);
}

SparseVector vectorize(const Document& doc, const FeatureSpace& space) {
    const FeatureCounts counts = extract_features(doc, space.spec);
    SparseVector v;
    v.dimension = space.dimension();
    for (const auto& [feature, count] : counts) {
        const auto it = space.vocabulary.find(feature);
        if (it == space.vocabulary.end()) continue; // out-of-vocabulary: dropped
        double value = static_cast<double>(count);
        if (!space.idf.empty()) value *= space.idf[it->second];
        v.entries.emplace_back(it->second, value);
    }
    std::sort(v.entries.begin(), v.entries.end());
    l2_normalize(v);
    return v;
}

void dump_space(const FeatureSpace& space, std::ostream& out) {
    for (int col = 0; col < space.dimension(); ++col)
        out << col << '\t' << space.feature_names[col] << '\t' << space.train_frequency[col]
            << '\n';
}

} // namespace nlistack
