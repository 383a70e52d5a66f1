#include "nlistack/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "nlistack/error.hpp"
#include "nlistack/numeric.hpp"

namespace nlistack {

namespace {

constexpr double kProductClamp = 1e-12;

// Collects the argmax winner of a score vector plus whether the maximum was
// shared (exact float equality; deliberate, since deterministic tie
// handling is part of the combiner contracts).
FusionResult result_from_scores(const DecisionProfile& profile, std::vector<double> scores) {
    FusionResult r;
    r.label_index = static_cast<int>(argmax(scores));
    int top_count = 0;
    for (const double s : scores)
        if (s == scores[r.label_index]) ++top_count;
    r.tie_broken = top_count > 1;
    r.label = profile.labels[r.label_index];
    r.scores = std::move(scores);
    return r;
}

// Column values in ascending order; summing/reducing over the sorted copy
// makes every combiner bit-exactly invariant to the row order.
std::vector<double> sorted_column(const DecisionProfile& profile, int k) {
    std::vector<double> col(profile.rows.size());
    for (std::size_t t = 0; t < profile.rows.size(); ++t) col[t] = profile.rows[t][k];
    std::sort(col.begin(), col.end());
    return col;
}

} // namespace

void validate_profile(const DecisionProfile& profile) {
    const int T = profile.base_count();
    const int K = profile.class_count();
    if (T < 1) throw DataError("decision profile has no base classifier rows");
    if (K < 2) throw DataError("decision profile needs at least 2 labels");
    for (const auto& row : profile.rows) {
        if (static_cast<int>(row.size()) != K)
            throw DataError("decision profile row length does not match label count");
        double sum = 0.0;
        for (const double p : row) {
            if (!(p >= 0.0)) throw DataError("decision profile entry is negative or NaN");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw DataError("decision profile row does not sum to 1");
    }
}

const char* combiner_name(Combiner combiner) {
    switch (combiner) {
        case Combiner::plurality: return "plurality";
        case Combiner::mean: return "mean";
        case Combiner::median: return "median";
        case Combiner::product: return "product";
        case Combiner::highest_confidence: return "highest-confidence";
        case Combiner::borda: return "borda";
    }
    return "?";
}

Combiner combiner_from_name(const std::string& name) {
    for (const Combiner c : all_combiners())
        if (name == combiner_name(c)) return c;
    std::string valid;
    for (const Combiner c : all_combiners()) {
        if (!valid.empty()) valid += ", ";
        valid += combiner_name(c);
    }
    throw ConfigError("unknown combiner '" + name + "' (expected one of: " + valid + ")");
}

const std::vector<Combiner>& all_combiners() {
    static const std::vector<Combiner> combiners = {
        Combiner::plurality, Combiner::mean,   Combiner::median,
        Combiner::product,   Combiner::highest_confidence, Combiner::borda};
    return combiners;
}

std::vector<int> row_votes(const DecisionProfile& profile) {
    std::vector<int> votes(profile.rows.size());
    for (std::size_t t = 0; t < profile.rows.size(); ++t)
        votes[t] = static_cast<int>(argmax(profile.rows[t]));
    return votes;
}

std::vector<int> ranked_vote_order(const std::vector<int>& vote_counts, Rng& rng) {
    std::vector<int> voted;
    for (std::size_t k = 0; k < vote_counts.size(); ++k)
        if (vote_counts[k] > 0) voted.push_back(static_cast<int>(k));
    // Descending count, equal counts kept in label order for now.
    std::stable_sort(voted.begin(), voted.end(),
                     [&](int a, int b) { return vote_counts[a] > vote_counts[b]; });
    // Shuffle each equal-count group so rank ties are a seeded uniform draw.
    // Because groups are assembled from counts alone (in label order), the
    // outcome is independent of the profile's row order.
    std::size_t start = 0;
    while (start < voted.size()) {
        std::size_t end = start + 1;
        while (end < voted.size() && vote_counts[voted[end]] == vote_counts[voted[start]]) ++end;
        if (end - start > 1) {
            std::vector<int> group(voted.begin() + start, voted.begin() + end);
            rng.shuffle(group);
            std::copy(group.begin(), group.end(), voted.begin() + start);
        }
        start = end;
    }
    return voted;
}

FusionResult plurality_vote(const DecisionProfile& profile, std::uint64_t seed) {
    const int K = profile.class_count();
    std::vector<int> counts(K, 0);
    for (const int v : row_votes(profile)) ++counts[v];

    Rng rng(seed);
    const std::vector<int> ranked = ranked_vote_order(counts, rng);
    FusionResult r;
    r.label_index = ranked.front();
    r.label = profile.labels[r.label_index];
    r.scores.assign(counts.begin(), counts.end());
    int top = 0;
    for (const int c : counts)
        if (c == counts[r.label_index]) ++top;
    r.tie_broken = top > 1;
    return r;
}

FusionResult mean_probability(const DecisionProfile& profile) {
    const int K = profile.class_count();
    std::vector<double> scores(K);
    for (int k = 0; k < K; ++k) {
        double sum = 0.0;
        for (const double v : sorted_column(profile, k)) sum += v;
        scores[k] = sum / static_cast<double>(profile.base_count());
    }
    return result_from_scores(profile, std::move(scores));
}

FusionResult median_probability(const DecisionProfile& profile) {
    const int K = profile.class_count();
    const int T = profile.base_count();
    std::vector<double> scores(K);
    for (int k = 0; k < K; ++k) {
        const std::vector<double> col = sorted_column(profile, k);
        scores[k] = T % 2 == 1 ? col[T / 2] : 0.5 * (col[T / 2 - 1] + col[T / 2]);
    }
    return result_from_scores(profile, std::move(scores));
}

FusionResult product_rule(const DecisionProfile& profile) {
    const int K = profile.class_count();
    std::vector<double> scores(K);
    for (int k = 0; k < K; ++k) {
        double log_sum = 0.0;
        for (const double v : sorted_column(profile, k))
            log_sum += std::log(std::max(v, kProductClamp));
        scores[k] = std::exp(log_sum);
    }
    return result_from_scores(profile, std::move(scores));
}

FusionResult highest_confidence(const DecisionProfile& profile, std::uint64_t seed) {
    const int K = profile.class_count();
    std::vector<double> scores(K); // per-label maximum over rows
    for (int k = 0; k < K; ++k) scores[k] = sorted_column(profile, k).back();

    const double global_max = *std::max_element(scores.begin(), scores.end());
    std::vector<int> tied;
    for (int k = 0; k < K; ++k)
        if (scores[k] == global_max) tied.push_back(k);

    FusionResult r;
    if (tied.size() == 1) {
        r.label_index = tied.front();
    } else {
        Rng rng(seed);
        r.label_index = tied[static_cast<std::size_t>(rng.uniform_below(tied.size()))];
        r.tie_broken = true;
    }
    r.label = profile.labels[r.label_index];
    r.scores = std::move(scores);
    return r;
}

FusionResult borda_count(const DecisionProfile& profile) {
    const int K = profile.class_count();
    std::vector<long long> points(K, 0);
    std::vector<int> ranking(K);
    for (const auto& row : profile.rows) {
        for (int k = 0; k < K; ++k) ranking[k] = k;
        std::stable_sort(ranking.begin(), ranking.end(),
                         [&](int a, int b) { return row[a] > row[b]; });
        for (int rank = 0; rank < K; ++rank) points[ranking[rank]] += K - rank;
    }
    std::vector<double> scores(points.begin(), points.end());
    return result_from_scores(profile, std::move(scores));
}

FusionResult apply_combiner(Combiner combiner, const DecisionProfile& profile,
                            std::uint64_t seed) {
    switch (combiner) {
        case Combiner::plurality: return plurality_vote(profile, seed);
        case Combiner::mean: return mean_probability(profile);
        case Combiner::median: return median_probability(profile);
        case Combiner::product: return product_rule(profile);
        case Combiner::highest_confidence: return highest_confidence(profile, seed);
        case Combiner::borda: return borda_count(profile);
    }
    throw ConfigError("unknown combiner");
}

OracleResult oracle(const std::vector<DecisionProfile>& profiles, const std::vector<int>& truth) {
    if (profiles.size() != truth.size())
        throw DataError("oracle: profile count does not match truth count");
    OracleResult result;
    result.correct.resize(profiles.size(), false);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        for (const int vote : row_votes(profiles[i])) {
            if (vote == truth[i]) {
                result.correct[i] = true;
                ++hits;
                break;
            }
        }
    }
    result.accuracy = profiles.empty() ? 0.0 : static_cast<double>(hits) / profiles.size();
    return result;
}

double accuracy_at_n(const std::vector<DecisionProfile>& profiles, const std::vector<int>& truth,
                     int n, std::uint64_t seed) {
    if (profiles.size() != truth.size())
        throw DataError("accuracy@N: profile count does not match truth count");
    if (n < 1) throw ConfigError("accuracy@N requires N >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        std::vector<int> counts(profiles[i].class_count(), 0);
        for (const int v : row_votes(profiles[i])) ++counts[v];
        Rng rng(mix_seed(seed, i));
        const std::vector<int> ranked = ranked_vote_order(counts, rng);
        const std::size_t cut = std::min<std::size_t>(static_cast<std::size_t>(n), ranked.size());
        for (std::size_t r = 0; r < cut; ++r) {
            if (ranked[r] == truth[i]) {
                ++hits;
                break;
            }
        }
    }
    return profiles.empty() ? 0.0 : static_cast<double>(hits) / profiles.size();
}

void dump_profiles(std::ostream& out, const std::vector<std::string>& base_names,
                   const std::vector<std::string>& labels,
                   const std::vector<std::string>& instance_ids,
                   const std::vector<DecisionProfile>& profiles) {
    out << "#bases";
    for (const auto& b : base_names) out << '\t' << b;
    out << "\n#labels";
    for (const auto& l : labels) out << '\t' << l;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        out << "#instance\t" << (i < instance_ids.size() ? instance_ids[i] : std::to_string(i))
            << '\n';
        for (const auto& row : profiles[i].rows) {
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (k) out << '\t';
                std::snprintf(buf, sizeof buf, "%.17g", row[k]);
                out << buf;
            }
            out << '\n';
        }
    }
}

} // namespace nlistack
