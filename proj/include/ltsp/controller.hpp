#pragma once

#include <vector>

#include "ltsp/types.hpp"

namespace ltsp::control {

// One point of the synthesis weight sweep.
struct SweepEntry {
    double rho = 0.0;
    double mu = 0.0;
    bool stabilizing = false;
    double certificate = 0.0;        // valid when stabilizing
    double closed_loop_radius = 0.0; // on the design model
};

// Output-feedback controller u = K(z) y in state-space form, together with
// the small-gain certificate ||K F_K||_Hinf it was certified with and the
// full design sweep record.
struct DynamicController {
    Mat a_k;  // n_K x n_K
    Mat b_k;  // n_K x d_y
    Mat c_k;  // d_u x n_K
    Mat d_k;  // d_u x d_y
    double certificate = 0.0;
    std::vector<SweepEntry> design_log;

    int order() const { return static_cast<int>(a_k.rows()); }
};

}  // namespace ltsp::control
