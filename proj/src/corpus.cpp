#include "nlistack/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlistack/error.hpp"
#include "nlistack/rng.hpp"

namespace fs = std::filesystem;

namespace nlistack {

int Dataset::label_index(const std::string& label) const {
    const auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) return -1;
    return static_cast<int>(it - labels.begin());
}

bool Dataset::has_lemmas() const {
    for (const auto& d : documents)
        for (const auto& s : d.sentences)
            for (const auto& t : s)
                if (t.lemma.empty()) return false;
    return !documents.empty();
}

bool Dataset::has_pos() const {
    for (const auto& d : documents)
        for (const auto& s : d.sentences)
            for (const auto& t : s)
                if (t.pos.empty()) return false;
    return !documents.empty();
}

int FoldAssignment::fold_of(const std::string& doc_id) const {
    const auto it = assignment.find(doc_id);
    if (it == assignment.end())
        throw DataError("document id not present in fold assignment: " + doc_id);
    return it->second;
}

namespace {

bool is_ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool ends_sentence(const std::string& tok) {
    return tok == "." || tok == "!" || tok == "?";
}

// Splits one whitespace-delimited chunk into leading punctuation tokens,
// a core token, and trailing punctuation tokens, preserving order.
void split_chunk(const std::string& chunk, std::vector<std::string>& out) {
    std::size_t begin = 0;
    std::size_t end = chunk.size();
    while (begin < end && is_ascii_punct(chunk[begin])) ++begin;
    while (end > begin && is_ascii_punct(chunk[end - 1])) --end;
    for (std::size_t i = 0; i < begin; ++i) out.emplace_back(1, chunk[i]);
    if (begin < end) out.push_back(chunk.substr(begin, end - begin));
    for (std::size_t i = end; i < chunk.size(); ++i) out.emplace_back(1, chunk[i]);
}

} // namespace

std::vector<Sentence> tokenize_plain(const std::string& text) {
    std::vector<Sentence> sentences;
    Sentence current;
    auto flush = [&]() {
        if (!current.empty()) {
            sentences.push_back(std::move(current));
            current.clear();
        }
    };

    std::istringstream lines(text);
    std::string line;
    std::vector<std::string> pieces;
    while (std::getline(lines, line)) {
        std::istringstream chunks(line);
        std::string chunk;
        while (chunks >> chunk) {
            pieces.clear();
            split_chunk(chunk, pieces);
            for (auto& p : pieces) {
                const bool terminal = ends_sentence(p);
                current.push_back(Token{std::move(p), "", ""});
                if (terminal) flush();
            }
        }
        flush(); // a line break also closes the sentence
    }
    flush();
    return sentences;
}

namespace {

Document load_plain_document(const fs::path& path, std::string id, std::string label) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open document file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    Document doc{std::move(id), std::move(label), tokenize_plain(buffer.str())};
    if (doc.sentences.empty())
        throw DataError("document contains no tokens: " + path.string());
    return doc;
}

Document load_annotated_document(const fs::path& path, std::string id, std::string label) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open document file: " + path.string());
    Document doc{std::move(id), std::move(label), {}};
    Sentence current;
    std::string line;
    std::size_t lineno = 0;
    auto flush = [&sentences = doc.sentences, &current]() {
        if (!current.empty()) {
            sentences.push_back(std::move(current));
            current.clear();
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw DataError("malformed annotated line (expected SURFACE<TAB>LEMMA<TAB>POS) at " +
                            path.string() + ":" + std::to_string(lineno));
        }
        Token tok;
        tok.surface = line.substr(0, tab1);
        tok.lemma = line.substr(tab1 + 1, tab2 - tab1 - 1);
        tok.pos = line.substr(tab2 + 1);
        if (tok.surface.empty())
            throw DataError("empty token surface at " + path.string() + ":" + std::to_string(lineno));
        if (tok.lemma == "_") tok.lemma.clear();
        if (tok.pos == "_") tok.pos.clear();
        current.push_back(std::move(tok));
    }
    flush();
    if (doc.sentences.empty())
        throw DataError("document contains no tokens: " + path.string());
    return doc;
}

} // namespace

Dataset load_dataset(const std::string& root_path, CorpusFormat format) {
    const fs::path root(root_path);
    if (!fs::is_directory(root))
        throw DataError("dataset root is not a directory: " + root_path);

    std::vector<std::string> classes;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) classes.push_back(entry.path().filename().string());
    }
    std::sort(classes.begin(), classes.end());
    if (classes.size() < 2)
        throw DataError("dataset needs at least 2 class directories, found " +
                        std::to_string(classes.size()) + " under " + root_path);

    const std::string ext = format == CorpusFormat::plain ? ".txt" : ".tok";
    Dataset ds;
    ds.labels = classes;
    std::unordered_map<std::string, std::string> id_owner; // id -> class, duplicate detection
    for (const auto& cls : classes) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(root / cls)) {
            if (entry.is_regular_file() && entry.path().extension() == ext)
                files.push_back(entry.path());
        }
        if (files.empty())
            throw DataError("class directory holds no " + ext + " documents: " + cls);
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
        for (const auto& file : files) {
            std::string id = file.stem().string();
            const auto [it, inserted] = id_owner.emplace(id, cls);
            if (!inserted)
                throw DataError("duplicate document id '" + id + "' in classes " +
                                it->second + " and " + cls);
            ds.documents.push_back(format == CorpusFormat::plain
                                       ? load_plain_document(file, id, cls)
                                       : load_annotated_document(file, id, cls));
        }
    }

    // An annotated dataset must be uniformly annotated: POS present on some
    // tokens but not others breaks the feature extractors' preconditions.
    if (format == CorpusFormat::annotated) {
        bool any_pos = false, all_pos = true;
        for (const auto& d : ds.documents)
            for (const auto& s : d.sentences)
                for (const auto& t : s) {
                    if (t.pos.empty()) all_pos = false;
                    else any_pos = true;
                }
        if (any_pos && !all_pos)
            throw DataError("annotated dataset mixes tokens with and without POS tags");
    }
    return ds;
}

SentencePools load_sentence_pools(const std::string& pool_dir, CorpusFormat format) {
    const fs::path root(pool_dir);
    if (!fs::is_directory(root))
        throw DataError("sentence-pool directory does not exist: " + pool_dir);
    const std::string ext = format == CorpusFormat::plain ? ".txt" : ".tok";

    SentencePools pools;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_regular_file() || entry.path().extension() != ext) continue;
        const std::string cls = entry.path().stem().string();
        std::vector<Sentence> sentences;
        if (format == CorpusFormat::plain) {
            std::ifstream in(entry.path());
            if (!in) throw DataError("cannot open pool file: " + entry.path().string());
            std::string line;
            while (std::getline(in, line)) {
                auto parsed = tokenize_plain(line);
                // One pool line is one sentence even if it carries internal
                // punctuation; re-join whatever the tokenizer split.
                Sentence merged;
                for (auto& s : parsed)
                    for (auto& t : s) merged.push_back(std::move(t));
                if (!merged.empty()) sentences.push_back(std::move(merged));
            }
        } else {
            Document doc = load_annotated_document(entry.path(), cls, cls);
            sentences = std::move(doc.sentences);
        }
        if (sentences.empty())
            throw DataError("sentence pool is empty for class: " + cls);
        pools.emplace(cls, std::move(sentences));
    }
    if (pools.empty())
        throw DataError("no " + ext + " pool files found under " + pool_dir);
    return pools;
}

Dataset generate_artificial_documents(const SentencePools& pools,
                                      std::size_t min_tokens,
                                      std::size_t max_tokens,
                                      std::uint64_t seed) {
    if (min_tokens < 1) throw ConfigError("minimum document length must be at least 1 token");
    if (min_tokens > max_tokens)
        throw ConfigError("invalid length range: min " + std::to_string(min_tokens) +
                          " exceeds max " + std::to_string(max_tokens));
    if (pools.empty()) throw ConfigError("no sentence pools given");
    for (const auto& [cls, pool] : pools)
        if (pool.empty()) throw DataError("sentence pool is empty for class: " + cls);

    Dataset ds;
    for (const auto& [cls, pool] : pools) ds.labels.push_back(cls);
    std::sort(ds.labels.begin(), ds.labels.end());

    for (std::size_t c = 0; c < ds.labels.size(); ++c) {
        const auto& cls = ds.labels[c];
        const auto& pool = pools.at(cls);
        Rng rng(mix_seed(seed, c));

        // Sampling without replacement == shuffle once, then consume in order.
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);

        std::size_t remaining = 0;
        for (const auto& s : pool) remaining += s.size();

        std::size_t next = 0;
        std::size_t seq = 0;
        while (true) {
            const std::size_t target = static_cast<std::size_t>(
                rng.uniform_int(static_cast<long long>(min_tokens),
                                static_cast<long long>(max_tokens)));
            if (remaining < target) break; // pool cannot reach the target; discard remainder

            Document doc;
            char idbuf[32];
            std::snprintf(idbuf, sizeof idbuf, "_%04zu", ++seq);
            doc.id = cls + idbuf;
            doc.label = cls;
            std::size_t have = 0;
            while (have < target) {
                const Sentence& s = pool[order[next++]];
                have += s.size();
                doc.sentences.push_back(s);
            }
            remaining -= have;
            ds.documents.push_back(std::move(doc));
        }
    }
    return ds;
}

FoldAssignment stratified_folds(const Dataset& dataset, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold count must be at least 2, got " + std::to_string(k));

    FoldAssignment folds;
    folds.k = k;
    for (std::size_t c = 0; c < dataset.labels.size(); ++c) {
        const auto& cls = dataset.labels[c];
        std::vector<const std::string*> ids;
        for (const auto& d : dataset.documents)
            if (d.label == cls) ids.push_back(&d.id);
        if (static_cast<int>(ids.size()) < k)
            throw DataError("class '" + cls + "' has " + std::to_string(ids.size()) +
                            " documents, fewer than " + std::to_string(k) + " folds");
        Rng rng(mix_seed(seed, c));
        rng.shuffle(ids);
        for (std::size_t j = 0; j < ids.size(); ++j)
            folds.assignment.emplace(*ids[j], static_cast<int>(j % k));
    }
    return folds;
}

void write_dataset(const Dataset& dataset, const std::string& out_dir, CorpusFormat format) {
    const fs::path root(out_dir);
    for (const auto& doc : dataset.documents) {
        const fs::path dir = root / doc.label;
        fs::create_directories(dir);
        const fs::path file = dir / (doc.id + (format == CorpusFormat::plain ? ".txt" : ".tok"));
        std::ofstream out(file, std::ios::binary); // binary: LF line endings everywhere
        if (!out) throw DataError("cannot write document file: " + file.string());
        if (format == CorpusFormat::plain) {
            for (const auto& s : doc.sentences) {
                for (std::size_t i = 0; i < s.size(); ++i) {
                    if (i) out << ' ';
                    out << s[i].surface;
                }
                out << '\n';
            }
        } else {
            for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
                if (si) out << '\n';
                for (const auto& t : doc.sentences[si]) {
                    out << t.surface << '\t' << (t.lemma.empty() ? "_" : t.lemma) << '\t'
                        << (t.pos.empty() ? "_" : t.pos) << '\n';
                }
            }
        }
    }
}

} // namespace nlistack
