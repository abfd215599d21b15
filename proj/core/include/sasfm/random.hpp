#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sasfm {

/// One engine per chain or per simulation call.
using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0,1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

/// log of a Gamma(shape, 1) draw; stays finite for very small shapes.
inline double log_gamma_draw(double shape, Rng& rng) {
    if (shape < 1.0) {
        std::gamma_distribution<double> boosted(shape + 1.0, 1.0);
        return std::log(boosted(rng)) + std::log(uniform01(rng)) / shape;
    }
    std::gamma_distribution<double> dist(shape, 1.0);
    return std::log(dist(rng));
}

}  // namespace sasfm
