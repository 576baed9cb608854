#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltsp/lti.hpp"
#include "ltsp/types.hpp"

namespace ltsp::sysid {

// Estimated Markov block row [D^, C^B^, C^A^B^, ...]; block 1 (1-indexed) is
// the feedthrough slot.
struct MarkovEstimate {
    Mat phi;    // d_y x (T d_u)
    Mat d_hat;  // d_y x d_u, equals block 1 of phi
    int m_rollouts = 0;
    int t_len = 0;
    double sigma_u = 0.0;
    int d_u = 0;
    int d_y = 0;

    // 1-indexed block access, j in 1..t_len.
    Mat block(int j) const;
};

// Block upper-triangular Toeplitz of one rollout's inputs: column t stacks
// u_t, u_{t-1}, ..., u_0 with zeros below, so outputs = Phi * toeplitz +
// noise.
Mat toeplitz_inputs(const lti::Rollout& rollout);

MarkovEstimate estimate_markov(const lti::RolloutSet& data);

// Lifted block-Hankel: block (i, j) = phi block (i + j + m), i in 1..p,
// j in 1..q. Requires m even, m >= 0, p, q >= 1 and m + p + q <= T.
struct HankelEstimate {
    Mat h;  // (p d_y) x (q d_u)
    int m = 0;
    int p = 0;
    int q = 0;
    int d_u = 0;
    int d_y = 0;
    Vec svals;  // full singular value list of h
};
HankelEstimate assemble_hankel(const MarkovEstimate& phi, int m, int p, int q);

struct OrderDetection {
    int k = 0;
    double gap_ratio = 0.0;
    bool weak_gap = false;  // gap_ratio < 10: lifting likely inadequate
};

// k = argmax over i in 1..min(k_max, len-1) of svals[i] / svals[i+1],
// ties broken toward smaller k.
OrderDetection detect_order(const Vec& svals, int k_max);

// Symmetric square-root factorization of the rank-k SVD truncation:
// o_hat = U S^{1/2}, c_hat = S^{1/2} V'.
struct LowRankFactors {
    Mat o_hat;  // (p d_y) x k
    Mat c_hat;  // k x (q d_u)
    int k = 0;
    Vec sigma_top;
    double gap_ratio = 0.0;  // sigma_k / sigma_{k+1}
    int m = 0;
    int p = 0;
    int q = 0;
    int d_u = 0;
    int d_y = 0;
};
LowRankFactors factor_rank_k(const HankelEstimate& h, int k);

// Extracted unstable subsystem (up to an unknown similarity transform).
struct ReducedModel {
    Mat n1;     // k x k
    Mat b1;     // k x d_u
    Mat c1;     // d_y x k
    Mat d_hat;  // d_y x d_u
    int k = 0;
    int m = 0;
    Vec sigma_top;
    double gap_ratio = 0.0;
    double shift_mismatch = 0.0;  // || power estimate from o_hat - from c_hat ||
    CVec n1_eigenvalues;          // sorted by nonincreasing modulus

    lti::LtiSystem as_system(bool include_d = false) const;
};

// Shift regressions on the factors: n1 from the one-step shift of o_hat; the
// m/2 powers estimated from both factors, inverted to strip the lift from the
// first block row/column. Requires p >= 2 and p, q >= m/2 + 1.
ReducedModel extract_model(const LowRankFactors& f, const Mat& d_hat);

struct IdentifyConfig {
    int m = 0;
    int p = 0;
    int q = 0;
    std::optional<int> k;  // absent: spectral-gap detection
};

// estimate_markov -> assemble_hankel -> (detect_order) -> factor_rank_k ->
// extract_model, with all diagnostics retained. Errors are tagged with the
// pipeline stage that raised them.
ReducedModel identify(const lti::RolloutSet& data, const IdentifyConfig& cfg);

struct PresetHints {
    int d_u = 1;
    int d_y = 1;
    std::optional<int> m;      // lift; defaults to 10
    std::optional<int> t_len;  // when given, p = q = floor((T - m) / 2)
    int m_rollouts_floor = 1;
};

struct Presets {
    int m = 0;
    int p = 0;
    int q = 0;
    int t_len = 0;
    int m_rollouts = 0;
    std::vector<std::string> notes;  // formulas used, one line per value
};

// Parameter recipes: p = q = m, T = 3m + 2, and the rollout-count lower bound
// 8 d_u T + 4 (d_u + d_y + 4) log(3T / delta). delta is treated as the
// failure probability.
Presets theorem_presets(const PresetHints& hints, double delta);

}  // namespace ltsp::sysid
