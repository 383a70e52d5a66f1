#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nlistack/rng.hpp"

namespace nlistack {

// The T base-classifier outputs for one instance: one probability row per
// base classifier over the K labels.
struct DecisionProfile {
    std::vector<std::vector<double>> rows; // T x K
    std::vector<std::string> labels;       // K class names

    int base_count() const { return static_cast<int>(rows.size()); }
    int class_count() const { return static_cast<int>(labels.size()); }
};

// Checks profile invariants (T >= 1, rectangular rows, each row summing to
// 1 within 1e-9, non-negative entries).  Deliberately a separate helper
// rather than something every combiner re-runs: combiners are hot-path pure
// functions, and diagnostic call sites may legitimately feed them raw score
// rows.  Construction sites validate.
void validate_profile(const DecisionProfile& profile);

struct FusionResult {
    int label_index = 0;
    std::string label;
    std::vector<double> scores; // per label; label_index = argmax after tie-breaking
    bool tie_broken = false;
};

enum class Combiner { plurality, mean, median, product, highest_confidence, borda };

const char* combiner_name(Combiner combiner);
Combiner combiner_from_name(const std::string& name);
const std::vector<Combiner>& all_combiners();

// Each row votes for its argmax; most votes wins; ties are resolved by a
// seeded uniform draw among the tied labels.
FusionResult plurality_vote(const DecisionProfile& profile, std::uint64_t seed);

// Column means; exact score ties go to the lowest label index.
FusionResult mean_probability(const DecisionProfile& profile);

// Column medians (mean of the two central values for even T).
FusionResult median_probability(const DecisionProfile& profile);

// Column products, computed as sums of logs with entries clamped to >=
// 1e-12 so a single zero cannot produce -inf.
FusionResult product_rule(const DecisionProfile& profile);

// The label of the single largest entry anywhere in the profile; equal
// global maxima on different labels are resolved by a seeded draw.
FusionResult highest_confidence(const DecisionProfile& profile, std::uint64_t seed);

// Each row ranks all K labels by descending probability (ties toward the
// lower label index) and awards K..1 points; highest total wins, exact
// total ties go to the lowest label index.
FusionResult borda_count(const DecisionProfile& profile);

FusionResult apply_combiner(Combiner combiner, const DecisionProfile& profile, std::uint64_t seed);

// Argmax vote of each row (ties within a row toward the lower label index).
std::vector<int> row_votes(const DecisionProfile& profile);

// Labels holding at least one vote, ordered by descending vote count;
// groups of equal-count labels are in a seeded random order.  Plurality
// voting takes the head of this list; Accuracy@N takes the first N.
std::vector<int> ranked_vote_order(const std::vector<int>& vote_counts, Rng& rng);

// Oracle diagnostic: an instance counts as correct if ANY base classifier's
// argmax equals the truth.  truth holds label indices aligned with the
// profiles' label order.
struct OracleResult {
    std::vector<bool> correct;
    double accuracy = 0.0;
};
OracleResult oracle(const std::vector<DecisionProfile>& profiles, const std::vector<int>& truth);

// Accuracy@N: correct if the truth is among the top N vote-ranked labels,
// considering only labels that received at least one vote.  Rank ties are
// resolved by a per-instance seeded draw (stream i = mix_seed(seed, i)),
// which makes Accuracy@1 decision-identical to plurality_vote called with
// that same per-instance seed.
double accuracy_at_n(const std::vector<DecisionProfile>& profiles, const std::vector<int>& truth,
                     int n, std::uint64_t seed);

// Debug dump: a header naming base classifiers and labels, then per
// instance an id line followed by T rows of K tab-separated probabilities.
void dump_profiles(std::ostream& out, const std::vector<std::string>& base_names,
                   const std::vector<std::string>& labels,
                   const std::vector<std::string>& instance_ids,
                   const std::vector<DecisionProfile>& profiles);

} // namespace nlistack
