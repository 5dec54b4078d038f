#pragma once

#include <cstdint>
#include <random>

namespace dyngame {

using Rng = std::mt19937_64;

/// Uniform draw on [0, 1).
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Uniform draw on [lo, hi]; returns lo when the interval is a point.
inline double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace dyngame
