#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "nlistack/error.hpp"
#include "nlistack/fusion.hpp"
#include "nlistack/rng.hpp"

using namespace nlistack;

namespace {

const std::vector<std::string> kToefl = {"ARA", "CHI", "FRE", "GER", "HIN", "ITA",
                                         "JPN", "KOR", "SPA", "TEL", "TUR"};

DecisionProfile profile_of(std::vector<std::string> labels,
                           std::vector<std::vector<double>> rows) {
    DecisionProfile p;
    p.labels = std::move(labels);
    p.rows = std::move(rows);
    return p;
}

// One-hot profile: each vote index becomes a row with probability 1 there.
DecisionProfile one_hot(const std::vector<std::string>& labels, const std::vector<int>& votes) {
    DecisionProfile p;
    p.labels = labels;
    for (const int v : votes) {
        std::vector<double> row(labels.size(), 0.0);
        row[v] = 1.0;
        p.rows.push_back(std::move(row));
    }
    return p;
}

int label_index(const std::vector<std::string>& labels, const std::string& name) {
    return static_cast<int>(std::find(labels.begin(), labels.end(), name) - labels.begin());
}

} // namespace

TEST_CASE("mean probability averages columns") {
    const DecisionProfile p =
        profile_of({"a", "b", "c"}, {{0.6, 0.3, 0.1}, {0.1, 0.6, 0.3}});
    const FusionResult r = mean_probability(p);
    CHECK(r.scores[0] == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(r.scores[1] == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(r.scores[2] == doctest::Approx(0.20).epsilon(1e-12));
    CHECK(r.label_index == 1);
    CHECK(r.label == "b");
    CHECK_FALSE(r.tie_broken);
}

TEST_CASE("median probability takes column medians (even count: central mean)") {
    const DecisionProfile p =
        profile_of({"a", "b"}, {{0.8, 0.2}, {0.1, 0.9}, {0.4, 0.6}});
    const FusionResult r = median_probability(p);
    CHECK(r.scores[0] == doctest::Approx(0.4));
    CHECK(r.scores[1] == doctest::Approx(0.6));
    CHECK(r.label_index == 1);

    const DecisionProfile even =
        profile_of({"a", "b"}, {{0.8, 0.2}, {0.1, 0.9}, {0.4, 0.6}, {0.3, 0.7}});
    const FusionResult re = median_probability(even);
    CHECK(re.scores[0] == doctest::Approx(0.35)); // mean of 0.3, 0.4
    CHECK(re.scores[1] == doctest::Approx(0.65)); // mean of 0.6, 0.7
}

TEST_CASE("product rule multiplies columns with a 1e-12 clamp on zeros") {
    const DecisionProfile p =
        profile_of({"a", "b", "c"}, {{0.5, 0.5, 0.0}, {0.9, 0.05, 0.05}});
    const FusionResult r = product_rule(p);
    CHECK(r.scores[0] == doctest::Approx(0.45).epsilon(1e-9));
    CHECK(r.scores[1] == doctest::Approx(0.025).epsilon(1e-9));
    CHECK(r.scores[2] == doctest::Approx(1e-12 * 0.05).epsilon(1e-6));
    CHECK(r.label_index == 0);
}

TEST_CASE("product rule: a clamped zero never beats labels whose entries stay >= 1e-6 (T=2)") {
    // Label a holds a true zero; label b sits at the 1e-6 floor everywhere;
    // label c carries the rest of the mass.
    const double eps = 1e-6;
    const DecisionProfile p = profile_of(
        {"a", "b", "c"}, {{0.0, eps, 1.0 - eps}, {1.0 - eps, eps, 0.0}});
    // Column products: a -> clamp(0) * (1-eps) < 1e-12; b -> eps^2 == 1e-12.
    const FusionResult r = product_rule(p);
    CHECK(r.scores[0] <= r.scores[1]);

    // All-uniform rows tie every label; the argmax convention picks index 0.
    const DecisionProfile uniform =
        profile_of({"a", "b"}, {{0.5, 0.5}, {0.5, 0.5}});
    const FusionResult ru = product_rule(uniform);
    CHECK(ru.label_index == 0);
    CHECK(ru.tie_broken);
}

TEST_CASE("highest confidence picks the single largest entry anywhere") {
    const DecisionProfile p = profile_of({"a", "b"}, {{0.4, 0.6}, {0.9, 0.1}});
    const FusionResult r = highest_confidence(p, 11);
    CHECK(r.label_index == 0);
    CHECK(r.scores[0] == doctest::Approx(0.9));
    CHECK(r.scores[1] == doctest::Approx(0.6));
    CHECK_FALSE(r.tie_broken);
}

TEST_CASE("highest confidence resolves equal global maxima with a seeded draw") {
    const DecisionProfile p = profile_of({"a", "b"}, {{0.9, 0.1}, {0.1, 0.9}});
    bool saw[2] = {false, false};
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const FusionResult r = highest_confidence(p, seed);
        CHECK(r.tie_broken);
        saw[r.label_index] = true;
        const FusionResult again = highest_confidence(p, seed);
        CHECK(again.label_index == r.label_index);
    }
    CHECK(saw[0]);
    CHECK(saw[1]);
}

TEST_CASE("Borda count awards K..1 points per row") {
    const DecisionProfile p = profile_of({"A", "B", "C", "D"},
                                         {{0.4, 0.3, 0.2, 0.1},   // A > B > C > D
                                          {0.3, 0.4, 0.2, 0.1},   // B > A > C > D
                                          {0.2, 0.4, 0.3, 0.1}}); // B > C > A > D
    const FusionResult r = borda_count(p);
    CHECK(r.scores == std::vector<double>{9.0, 11.0, 7.0, 3.0});
    CHECK(r.label == "B");
}

TEST_CASE("Borda in-row probability ties rank the lower label index first") {
    const DecisionProfile p = profile_of({"a", "b", "c"}, {{0.4, 0.4, 0.2}});
    const FusionResult r = borda_count(p);
    CHECK(r.scores == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(r.label_index == 0);
}

TEST_CASE("plurality vote counts row argmaxes") {
    const DecisionProfile p =
        one_hot(kToefl, {label_index(kToefl, "JPN"), label_index(kToefl, "JPN"),
                         label_index(kToefl, "KOR")});
    const FusionResult r = plurality_vote(p, 123);
    CHECK(r.label == "JPN");
    CHECK_FALSE(r.tie_broken);
    CHECK(r.scores[label_index(kToefl, "JPN")] == doctest::Approx(2.0));
    CHECK(r.scores[label_index(kToefl, "KOR")] == doctest::Approx(1.0));
}

TEST_CASE("plurality ties are a seeded draw among the tied labels only") {
    const DecisionProfile p = one_hot({"a", "b", "c"}, {0, 1}); // a and b tie, c unvoted
    bool saw[3] = {false, false, false};
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const FusionResult r = plurality_vote(p, seed);
        CHECK(r.tie_broken);
        REQUIRE(r.label_index < 2); // never the unvoted label
        saw[r.label_index] = true;
        CHECK(plurality_vote(p, seed).label_index == r.label_index);
    }
    CHECK(saw[0]);
    CHECK(saw[1]);
    CHECK_FALSE(saw[2]);
}

TEST_CASE("a one-classifier ensemble reduces every combiner to that classifier") {
    const DecisionProfile p = profile_of({"a", "b", "c"}, {{0.2, 0.5, 0.3}});
    for (const Combiner c : all_combiners()) {
        const FusionResult r = apply_combiner(c, p, 77);
        CHECK(r.label_index == 1);
    }
}

TEST_CASE("sorted-column combiners are bit-exactly row-order invariant") {
    const DecisionProfile p = profile_of({"a", "b", "c"},
                                         {{0.61, 0.28, 0.11},
                                          {0.07, 0.55, 0.38},
                                          {0.33, 0.33, 0.34},
                                          {0.49, 0.02, 0.49}});
    DecisionProfile reversed = p;
    std::reverse(reversed.rows.begin(), reversed.rows.end());
    DecisionProfile rotated = p;
    std::rotate(rotated.rows.begin(), rotated.rows.begin() + 1, rotated.rows.end());
    for (const Combiner c : {Combiner::mean, Combiner::median, Combiner::product,
                             Combiner::borda, Combiner::highest_confidence}) {
        const FusionResult base = apply_combiner(c, p, 5);
        for (const DecisionProfile* variant : {&reversed, &rotated}) {
            const FusionResult r = apply_combiner(c, *variant, 5);
            CHECK(r.label_index == base.label_index);
            REQUIRE(r.scores.size() == base.scores.size());
            for (std::size_t k = 0; k < r.scores.size(); ++k) {
                CHECK(r.scores[k] == base.scores[k]); // bit-identical
            }
        }
    }
}

TEST_CASE("oracle counts an instance when any row hits the truth") {
    std::vector<DecisionProfile> profiles;
    std::vector<int> truth;
    const auto add = [&](const std::string& gold, const std::vector<std::string>& votes) {
        std::vector<int> indices;
        for (const auto& v : votes) indices.push_back(label_index(kToefl, v));
        profiles.push_back(one_hot(kToefl, indices));
        truth.push_back(label_index(kToefl, gold));
    };
    add("ARA", {"TUR", "ARA", "ARA"});
    add("CHI", {"JPN", "JPN", "KOR"});
    add("HIN", {"GER", "TEL", "HIN"});
    add("SPA", {"SPA", "SPA", "SPA"});
    add("ITA", {"FRE", "GER", "SPA"});
    const OracleResult r = oracle(profiles, truth);
    CHECK(r.correct == std::vector<bool>{true, false, true, true, false});
    CHECK(r.accuracy == doctest::Approx(0.6));
}

TEST_CASE("accuracy@N restricts candidates to labels holding votes") {
    const std::vector<int> votes = {label_index(kToefl, "JPN"), label_index(kToefl, "JPN"),
                                    label_index(kToefl, "KOR")};
    const std::vector<DecisionProfile> profiles = {one_hot(kToefl, votes)};
    // Truth CHI received no vote: not recoverable at any N.
    CHECK(accuracy_at_n(profiles, {label_index(kToefl, "CHI")}, 2, 9) == doctest::Approx(0.0));
    CHECK(accuracy_at_n(profiles, {label_index(kToefl, "CHI")}, 11, 9) == doctest::Approx(0.0));
    // Truth KOR is the second-ranked vote-getter: @1 misses, @2 hits.
    CHECK(accuracy_at_n(profiles, {label_index(kToefl, "KOR")}, 1, 9) == doctest::Approx(0.0));
    CHECK(accuracy_at_n(profiles, {label_index(kToefl, "KOR")}, 2, 9) == doctest::Approx(1.0));
    CHECK(accuracy_at_n(profiles, {label_index(kToefl, "JPN")}, 1, 9) == doctest::Approx(1.0));
}

TEST_CASE("accuracy@1 is decision-identical to per-instance-seeded plurality") {
    // Tie-heavy two-way votes make the rank draw matter.
    std::vector<DecisionProfile> profiles;
    std::vector<int> truth;
    Rng gen(314);
    for (int i = 0; i < 40; ++i) {
        const int a = static_cast<int>(gen.uniform_below(3));
        int b = static_cast<int>(gen.uniform_below(3));
        profiles.push_back(one_hot({"x", "y", "z"}, {a, b}));
        truth.push_back(static_cast<int>(gen.uniform_below(3)));
    }
    const std::uint64_t seed = 20240229;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const FusionResult r = plurality_vote(profiles[i], mix_seed(seed, i));
        if (r.label_index == truth[i]) ++hits;
    }
    const double expected = static_cast<double>(hits) / profiles.size();
    CHECK(accuracy_at_n(profiles, truth, 1, seed) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("ranked_vote_order lists voted labels by descending count") {
    Rng rng(8);
    const std::vector<int> order = ranked_vote_order({2, 0, 1, 0}, rng);
    CHECK(order == std::vector<int>{0, 2});
    Rng rng2(8);
    const std::vector<int> tied = ranked_vote_order({1, 1, 0}, rng2);
    REQUIRE(tied.size() == 2);
    const bool forward = tied == std::vector<int>{0, 1};
    const bool backward = tied == std::vector<int>{1, 0};
    CHECK((forward || backward));
}

TEST_CASE("profile validation rejects malformed rows") {
    DecisionProfile empty;
    empty.labels = {"a", "b"};
    CHECK_THROWS_AS(validate_profile(empty), DataError);

    DecisionProfile ragged = profile_of({"a", "b"}, {{0.5, 0.5}, {1.0}});
    CHECK_THROWS_AS(validate_profile(ragged), DataError);

    DecisionProfile negative = profile_of({"a", "b"}, {{1.2, -0.2}});
    CHECK_THROWS_AS(validate_profile(negative), DataError);

    DecisionProfile off_sum = profile_of({"a", "b"}, {{0.6, 0.6}});
    CHECK_THROWS_AS(validate_profile(off_sum), DataError);

    DecisionProfile ok = profile_of({"a", "b"}, {{0.6, 0.4}});
    CHECK_NOTHROW(validate_profile(ok));
}

TEST_CASE("combiner names round-trip and unknown names are rejected") {
    for (const Combiner c : all_combiners()) {
        CHECK(combiner_from_name(combiner_name(c)) == c);
    }
    CHECK(testing::throws_with_substring<ConfigError>(
        [] { combiner_from_name("nope"); },
        "unknown combiner 'nope' (expected one of: plurality, mean, median, product, "
        "highest-confidence, borda)"));
}

TEST_CASE("profile dumps carry header lines and one row per base") {
    const std::vector<DecisionProfile> profiles = {
        profile_of({"a", "b"}, {{0.25, 0.75}, {1.0, 0.0}})};
    std::ostringstream out;
    dump_profiles(out, {"word_1", "char_2"}, {"a", "b"}, {"doc9"}, profiles);
    CHECK(out.str() ==
          "#bases\tword_1\tchar_2\n"
          "#labels\ta\tb\n"
          "#instance\tdoc9\n"
          "0.25\t0.75\n"
          "1\t0\n");
}
