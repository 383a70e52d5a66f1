#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace nlistack {

// Derives an independent child seed from (seed, stream) with the splitmix64
// finalizer.  Every component that needs its own random stream (a fold, a
// bagged replicate, a per-class SVM problem) takes a seed produced here, so
// results do not depend on the order in which components are run.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random source.  Wraps std::mt19937_64 but derives all draws
// by hand: the standard <random> distributions are not guaranteed to produce
// identical sequences across library implementations, and reproducibility of
// runs is part of this library's contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, bound) via rejection sampling (no modulo bias).
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return draw % bound;
    }

    // Uniform integer in [lo, hi] inclusive.
    long long uniform_int(long long lo, long long hi) {
        return lo + static_cast<long long>(
                        uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform_real01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (the sine deviate is discarded to keep
    // the draw count per call fixed).
    double normal() {
        double u1 = uniform_real01();
        while (u1 <= 0.0) u1 = uniform_real01();
        const double u2 = uniform_real01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Child generator for a named sub-stream.  Depends only on this
    // generator's seed, not on how many draws have been made, so components
    // can be seeded independent of evaluation order.
    Rng derive(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

} // namespace nlistack
