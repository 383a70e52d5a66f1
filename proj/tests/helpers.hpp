#pragma once

// Shared synthetic-data builders for the test binaries.  Everything here is
// pure and seed-deterministic so tests can assert exact values.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "nlistack/corpus.hpp"
#include "nlistack/rng.hpp"

namespace nlistack::testing {

// True iff fn() throws an E whose message contains `needle`.  (The vendored
// doctest predates doctest::Contains.)
template <typename E, typename F>
bool throws_with_substring(F&& fn, const std::string& needle) {
    try {
        fn();
    } catch (const E& error) {
        return std::string(error.what()).find(needle) != std::string::npos;
    } catch (...) {
        return false;
    }
    return false;
}

// A K-class in-memory corpus with class-skewed token distributions plus
// shared noise.  Each class owns a small pool of words built from a
// class-rotated letter window, so word n-grams AND character n-grams both
// carry (partial) class signal; a confusion rate injects the neighboring
// class's words so the problem is not trivially separable.
inline Dataset make_skewed_dataset(int class_count, int docs_per_class, std::uint64_t seed,
                                   double class_token_prob = 0.45,
                                   double confusion_prob = 0.10) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz";
    Rng vocab_rng(mix_seed(seed, 0x766f636162ULL));
    auto make_word = [&](int letter_base) {
        const int length = static_cast<int>(vocab_rng.uniform_int(3, 6));
        std::string word;
        for (int i = 0; i < length; ++i) {
            word += alphabet[(letter_base + vocab_rng.uniform_int(0, 11)) % 26];
        }
        return word;
    };

    std::vector<std::string> shared_words;
    for (int i = 0; i < 40; ++i) {
        shared_words.push_back(make_word(0));
    }
    std::vector<std::vector<std::string>> class_words(static_cast<std::size_t>(class_count));
    for (int c = 0; c < class_count; ++c) {
        for (int i = 0; i < 12; ++i) {
            class_words[static_cast<std::size_t>(c)].push_back(make_word(7 + 4 * c));
        }
    }

    Dataset dataset;
    for (int c = 0; c < class_count; ++c) {
        dataset.labels.push_back("lang_" + std::string(1, static_cast<char>('a' + c)));
    }
    for (int c = 0; c < class_count; ++c) {
        const std::string& label = dataset.labels[static_cast<std::size_t>(c)];
        for (int j = 0; j < docs_per_class; ++j) {
            Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(c)),
                             static_cast<std::uint64_t>(j)));
            Document doc;
            char suffix[16];
            std::snprintf(suffix, sizeof(suffix), "%04d", j + 1);
            doc.id = label + "_" + suffix;
            doc.label = label;
            int remaining = static_cast<int>(rng.uniform_int(40, 80));
            while (remaining > 0) {
                const int sentence_len =
                    std::min<int>(remaining, static_cast<int>(rng.uniform_int(6, 12)));
                Sentence sentence;
                for (int t = 0; t < sentence_len; ++t) {
                    const double u = rng.uniform_real01();
                    const std::string* word = nullptr;
                    if (u < class_token_prob) {
                        int source = c;
                        if (rng.uniform_real01() < confusion_prob) {
                            source = (c + 1) % class_count;
                        }
                        const auto& pool = class_words[static_cast<std::size_t>(source)];
                        word = &pool[rng.uniform_below(pool.size())];
                    } else {
                        word = &shared_words[rng.uniform_below(shared_words.size())];
                    }
                    sentence.push_back(Token{*word, "", ""});
                }
                doc.sentences.push_back(std::move(sentence));
                remaining -= sentence_len;
            }
            dataset.documents.push_back(std::move(doc));
        }
    }
    return dataset;
}

// A plain-text sentence pool: `sentences` sentences per class, each
// `min_len..max_len` tokens drawn from a small shared vocabulary.
inline SentencePools make_sentence_pools(int class_count, int sentences, int min_len, int max_len,
                                         std::uint64_t seed) {
    static const char* kWords[] = {"sun",  "tree", "river", "stone", "cloud", "field",
                                   "bird", "wind", "house", "road",  "light", "rain"};
    SentencePools pools;
    for (int c = 0; c < class_count; ++c) {
        const std::string label = "pool_" + std::string(1, static_cast<char>('a' + c));
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
        std::vector<Sentence>& list = pools[label];
        for (int s = 0; s < sentences; ++s) {
            const int length = static_cast<int>(rng.uniform_int(min_len, max_len));
            Sentence sentence;
            for (int t = 0; t < length; ++t) {
                sentence.push_back(Token{kWords[rng.uniform_below(12)], "", ""});
            }
            list.push_back(std::move(sentence));
        }
    }
    return pools;
}

} // namespace nlistack::testing
