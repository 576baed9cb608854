#pragma once

#include <cstdint>
#include <vector>

#include "ltsp/controller.hpp"
#include "ltsp/types.hpp"

namespace ltsp::lti {

// Discrete-time plant x+ = A x + B u + w, y = C x + D u + v with Gaussian
// process / observation noise of the given standard deviations.
struct LtiSystem {
    Mat a;  // n x n
    Mat b;  // n x d_u
    Mat c;  // d_y x n
    Mat d;  // d_y x d_u
    double sigma_w = 0.0;
    double sigma_v = 0.0;

    int n() const { return static_cast<int>(a.rows()); }
    int d_u() const { return static_cast<int>(b.cols()); }
    int d_y() const { return static_cast<int>(c.rows()); }
    void validate() const;  // throws DimensionError / ParameterError
};

struct Rollout {
    Mat inputs;   // d_u x T, column t is u_t
    Mat outputs;  // d_y x T
    std::uint64_t seed = 0;

    int t_len() const { return static_cast<int>(inputs.cols()); }
};

struct RolloutSet {
    std::vector<Rollout> rollouts;
    double sigma_u = 1.0;

    int count() const { return static_cast<int>(rollouts.size()); }
    int t_len() const { return rollouts.empty() ? 0 : rollouts.front().t_len(); }
    int d_u() const { return rollouts.empty() ? 0 : static_cast<int>(rollouts.front().inputs.rows()); }
    int d_y() const { return rollouts.empty() ? 0 : static_cast<int>(rollouts.front().outputs.rows()); }
};

// Recipe for random benchmark plants: k eigenvalues drawn uniformly from the
// unstable interval, n-k from the stable one, planted through a random basis
// resampled until its condition number passes the cap.
struct GenSpec {
    int n = 0;
    int k = 0;
    double unstable_min = 1.1;
    double unstable_max = 2.0;
    double stable_min = 0.0;
    double stable_max = 0.5;
    int d_u = 1;
    int d_y = 1;
    double basis_conditioning_cap = 100.0;
    double d_scale = 0.0;  // 0 keeps D = 0; otherwise D entries are N(0, d_scale^2)
    // Scale on the stable subsystem's input/output coupling (the R2 B and
    // C Q2 components). 1 leaves B, C as drawn; values < 1 shrink
    // ||Delta||_Hinf, the regime the small-gain design premise needs.
    double stable_coupling = 1.0;
    double sigma_w = 0.0;
    double sigma_v = 0.0;

    void validate() const;
};

LtiSystem generate_system(const GenSpec& spec, std::uint64_t seed);

// Simulates from x0 = 0. Deterministic given the seed; noise draw order per
// step is w_t (n entries) then v_t (d_y entries).
Rollout simulate_rollout(const LtiSystem& sys, const Mat& inputs, std::uint64_t seed);

// M independent rollouts with i.i.d. N(0, sigma_u^2) inputs. Rollout i uses
// sub-seed derive_seed(seed, i); within it, inputs come from stream 0 and
// simulation noise from stream 1.
RolloutSet collect(const LtiSystem& sys, int m_rollouts, int t_len, double sigma_u,
                   std::uint64_t seed);

// C (zI - A)^{-1} B + D.
CMat transfer_eval(const LtiSystem& sys, Complex z);

// Block row [D, CB, CAB, ..., C A^{count-2} B] by direct matrix powers.
Mat markov_parameters(const LtiSystem& sys, int count);

// Additive split of the plant into its unstable part (N1, R1 B, C Q1, 0) and
// stable part (N2, R2 B, C Q2, D); the two transfer functions sum to the
// plant's.
struct Decomposition {
    LtiSystem unstable;
    LtiSystem stable;
};
Decomposition true_decomposition(const LtiSystem& sys);

// State matrix of the positive-feedback interconnection u = K y. Requires
// I - D_K D invertible.
Mat closed_loop_matrix(const LtiSystem& sys, const control::DynamicController& ctrl);

// Steps the plant/controller loop componentwise (no noise) from the given
// initial plant state; returns the state-norm trajectory including t = 0.
Vec closed_loop_sim_norms(const LtiSystem& sys, const control::DynamicController& ctrl,
                          const Vec& x0, int steps);

}  // namespace ltsp::lti
