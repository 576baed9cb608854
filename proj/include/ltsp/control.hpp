#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ltsp/controller.hpp"
#include "ltsp/lti.hpp"
#include "ltsp/sysid.hpp"
#include "ltsp/types.hpp"

namespace ltsp::control {

// Unit-circle evaluation grid for the H-infinity norm: uniform on [0, pi]
// (conjugate symmetry of real-coefficient systems), then golden-section
// refinement around the top grid maxima.
struct FreqGrid {
    int n_points = 4096;
    int refine_iters = 60;
    double tol = 1e-6;

    void validate() const;
};

// sup over |z| = 1 of sigma_max(G(z)) for a stable quadruple; throws
// UnstablePlantError when the spectral radius is >= 1.
double hinf_norm(const lti::LtiSystem& ss, const FreqGrid& grid = {});

// State-space realization of K(z) (I - F(z) K(z))^{-1} for the reduced model
// F (no feedthrough) under positive feedback u = K y.
lti::LtiSystem series_sensitivity(const sysid::ReducedModel& model,
                                  const DynamicController& ctrl);

struct SynthesisOptions {
    // Shared log ladder for the state weight rho and observer weight mu.
    std::vector<double> weight_ladder;  // default: 13 points in [1e-3, 1e3]
    FreqGrid grid;

    static std::vector<double> default_ladder();
};

// Observer-based output feedback: state gain from solve_dare(n1, b1, rho I, I)
// and observer gain from the dual DARE; the (rho, mu) pair minimizing the
// certificate ||K F_K||_Hinf wins (ties toward smaller rho, then mu). A zero
// controller joins the sweep when the model is already stable.
DynamicController synthesize(const sysid::ReducedModel& model, const SynthesisOptions& opts = {});

struct SmallGainCertificate {
    double certificate = 0.0;
    std::optional<double> delta_hinf_bound;
    std::optional<double> small_gain_margin;  // 1 - certificate * delta_hinf_bound
    bool guaranteed = false;                  // margin > 0
};

// Requires ctrl to internally stabilize the model's F.
SmallGainCertificate certify_small_gain(const sysid::ReducedModel& model,
                                        const DynamicController& ctrl,
                                        std::optional<double> delta_bound = std::nullopt,
                                        const FreqGrid& grid = {});

struct StabilizationReport {
    double closed_loop_radius = 0.0;
    bool stabilized = false;  // radius < 1 - 1e-9
    double certificate = 0.0;
    std::optional<double> delta_hinf_bound;
    std::optional<double> small_gain_margin;
    bool guaranteed = false;
    bool sim_decay_check = false;
};

// Ground-truth check, available only in simulation: closed-loop spectral
// radius, a 500-step decay simulation from a random unit initial state, and
// the oracle ||Delta||_Hinf of the true stable part when the split succeeds.
StabilizationReport verify_on_plant(const lti::LtiSystem& sys, const DynamicController& ctrl,
                                    std::uint64_t sim_seed = 0xC0FFEEull);

// Rewires the controller to act on y - d_hat * u, absorbing the estimated
// feedthrough into the interconnection. Identity when d_hat is zero.
DynamicController fold_feedthrough(const DynamicController& ctrl, const Mat& d_hat);

}  // namespace ltsp::control
