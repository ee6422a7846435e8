// Deterministic random draws on top of std::mt19937_64.
//
// The engine itself is fully specified by the standard, but the standard
// *distributions* are not (their algorithms are implementation-defined), so
// every draw here is hand-rolled from raw engine output.  Fixed seed implies
// bit-identical streams on every platform, which the reproducibility
// contracts of the solver and the experiment runner rely on.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ssldro/errors.hpp"

namespace ssldro {

using rng_engine = std::mt19937_64;

// Uniform integer in [0, n) without modulo bias (rejection sampling).
inline std::uint64_t uniform_below(rng_engine& rng, std::uint64_t n) {
    if (n == 0) throw config_error("uniform_below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(rng_engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via the Marsaglia polar method (no cached spare: one value
// per call keeps the stream position a pure function of the call count).
inline double standard_normal(rng_engine& rng) {
    for (;;) {
        const double u = 2.0 * uniform01(rng) - 1.0;
        const double v = 2.0 * uniform01(rng) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

// Exponential with the given rate.
inline double exponential(rng_engine& rng, double rate) {
    if (!(rate > 0.0)) throw config_error("exponential: rate must be > 0");
    return -std::log1p(-uniform01(rng)) / rate;
}

// Geometric number of failures before the first success: P(G=g) = p(1-p)^g,
// g = 0,1,2,...  Sampled by inversion.
inline int geometric_failures(rng_engine& rng, double p) {
    if (!(p > 0.0 && p < 1.0)) throw config_error("geometric_failures: p must be in (0,1)");
    const double u = uniform01(rng);
    return static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

// In-place Fisher-Yates shuffle driven by uniform_below.
template <typename T>
void shuffle(std::vector<T>& v, rng_engine& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace ssldro
