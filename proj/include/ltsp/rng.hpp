#pragma once

#include <cstdint>
#include <random>

#include "ltsp/types.hpp"

namespace ltsp {

// Deterministic Gaussian stream: std::mt19937_64 (bit-exact across platforms)
// feeding a Box-Muller transform. std::normal_distribution is deliberately
// avoided because its draw sequence is implementation defined.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal();
    double normal(double sigma) { return sigma * normal(); }

    // Matrices are filled row by row so the draw order matches the row-major
    // serialization convention.
    Mat normal_mat(int rows, int cols, double sigma = 1.0);
    Vec normal_vec(int n, double sigma = 1.0);

   private:
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Derives independent sub-seeds from a master seed by one splitmix64 step per
// index: finalize(base + (index + 1) * golden_gamma). Every module that fans
// out work (rollouts, trials, sweep points) uses this one scheme.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace ltsp
