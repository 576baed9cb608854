#include "ltsp/rng.hpp"

#include <cmath>

namespace ltsp {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Basic Box-Muller; u1 is shifted off zero so log stays finite.
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

Mat Rng::normal_mat(int rows, int cols, double sigma) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = sigma * normal();
    return m;
}

Vec Rng::normal_vec(int n, double sigma) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = sigma * normal();
    return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64_finalize(base + (index + 1) * kGoldenGamma);
}

}  // namespace ltsp
