#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nlistack/error.hpp"

namespace nlistack {

// Index of the largest value; exact ties go to the lowest index so that
// argmax decisions are reproducible everywhere.
inline std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

// Numerically stable softmax.  Guaranteed to preserve the argmax of the
// input scores; several fusion invariants rely on that.
inline std::vector<double> softmax(const std::vector<double>& scores) {
    const double hi = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - hi);
        z += out[i];
    }
    for (double& p : out) p /= z;
    return out;
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
}

// Upper tail of the chi-square distribution with one degree of freedom:
// P(X > x) = erfc(sqrt(x/2)).  erfc is accurate to well below the 1e-10
// absolute accuracy this library promises for p-values.
inline double chi_square1_upper_tail(double x) {
    if (x <= 0.0) return 1.0;
    return std::erfc(std::sqrt(x / 2.0));
}

} // namespace nlistack
