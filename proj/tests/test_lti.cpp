#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ltsp/control.hpp"
#include "ltsp/errors.hpp"
#include "ltsp/lti.hpp"
#include "ltsp/numerics.hpp"
#include "ltsp/rng.hpp"

using namespace ltsp;
using namespace ltsp::lti;

namespace {

LtiSystem scalar_sys(double a, double b, double c, double d) {
    LtiSystem sys;
    sys.a = Mat::Constant(1, 1, a);
    sys.b = Mat::Constant(1, 1, b);
    sys.c = Mat::Constant(1, 1, c);
    sys.d = Mat::Constant(1, 1, d);
    return sys;
}

control::DynamicController static_gain(double k) {
    control::DynamicController ctrl;
    ctrl.a_k = Mat(0, 0);
    ctrl.b_k = Mat(0, 1);
    ctrl.c_k = Mat(1, 0);
    ctrl.d_k = Mat::Constant(1, 1, k);
    return ctrl;
}

}  // namespace

TEST_CASE("generate_system plants the requested spectrum") {
    GenSpec degenerate;
    degenerate.n = 1;
    degenerate.k = 1;
    degenerate.unstable_min = degenerate.unstable_max = 2.0;
    const LtiSystem one = generate_system(degenerate, 3);
    CHECK(one.a(0, 0) == doctest::Approx(2.0));

    GenSpec all_unstable;
    all_unstable.n = 5;
    all_unstable.k = 5;
    const LtiSystem sys5 = generate_system(all_unstable, 17);
    const CVec ev = numerics::eigenvalues(sys5.a);
    for (int i = 0; i < 5; ++i) {
        CHECK(std::abs(ev(i)) >= 1.1 - 1e-9);
        CHECK(std::abs(ev(i)) <= 2.0 + 1e-9);
    }

    GenSpec mixed;
    mixed.n = 12;
    mixed.k = 3;
    const LtiSystem sys12 = generate_system(mixed, 23);
    CHECK(numerics::schur_split_unstable(sys12.a).k == 3);
}

TEST_CASE("generate_system validates its spec") {
    GenSpec bad;
    bad.n = 4;
    bad.k = 0;
    CHECK_THROWS_AS(generate_system(bad, 1), ParameterError);
    bad.k = 2;
    bad.stable_max = 1.5;
    CHECK_THROWS_AS(generate_system(bad, 1), ParameterError);
}

TEST_CASE("simulate_rollout hand recursions") {
    const Mat zero_inputs = Mat::Zero(1, 6);
    const Rollout quiet = simulate_rollout(scalar_sys(2, 1, 1, 0), zero_inputs, 5);
    CHECK(quiet.outputs.norm() == 0.0);

    Mat impulse(1, 3);
    impulse << 1, 0, 0;
    const Rollout r = simulate_rollout(scalar_sys(2, 1, 1, 0), impulse, 5);
    CHECK(r.outputs(0, 0) == doctest::Approx(0.0));
    CHECK(r.outputs(0, 1) == doctest::Approx(1.0));
    CHECK(r.outputs(0, 2) == doctest::Approx(2.0));

    const Rollout rd = simulate_rollout(scalar_sys(2, 1, 1, 1), impulse, 5);
    CHECK(rd.outputs(0, 0) == doctest::Approx(1.0));
    CHECK(rd.outputs(0, 1) == doctest::Approx(1.0));
    CHECK(rd.outputs(0, 2) == doctest::Approx(2.0));
}

TEST_CASE("simulate_rollout reports blow-up step") {
    LtiSystem sys = scalar_sys(10, 1, 1, 0);
    Mat inputs = Mat::Ones(1, 200);
    CHECK_THROWS_AS(simulate_rollout(sys, inputs, 1), BlowUpError);
}

TEST_CASE("superposition: doubling inputs doubles noiseless outputs") {
    GenSpec spec;
    spec.n = 6;
    spec.k = 2;
    const LtiSystem sys = generate_system(spec, 31);
    Rng rng(8);
    const Mat inputs = rng.normal_mat(1, 20);
    const Rollout r1 = simulate_rollout(sys, inputs, 2);
    const Rollout r2 = simulate_rollout(sys, 2.0 * inputs, 2);
    CHECK((r2.outputs - 2.0 * r1.outputs).norm() == 0.0);
}

TEST_CASE("Markov consistency against direct matrix powers") {
    GenSpec spec;
    spec.n = 7;
    spec.k = 2;
    spec.d_u = 2;
    spec.d_y = 2;
    spec.d_scale = 0.7;
    const LtiSystem sys = generate_system(spec, 41);
    Rng rng(9);
    const int t_len = 12;
    const Mat inputs = rng.normal_mat(2, t_len);
    const Rollout roll = simulate_rollout(sys, inputs, 3);
    const Mat phi = markov_parameters(sys, t_len);
    for (int t = 0; t < t_len; ++t) {
        Vec expect = sys.d * inputs.col(t);
        for (int j = 0; j < t; ++j)
            expect += phi.middleCols((t - j) * 2, 2) * inputs.col(j);
        CHECK((roll.outputs.col(t) - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
    }
}

TEST_CASE("collect shapes, determinism, zero-input edge") {
    const LtiSystem sys = scalar_sys(0.5, 1, 1, 0);
    const RolloutSet s1 = collect(sys, 3, 5, 1.0, 77);
    CHECK(s1.count() == 3);
    CHECK(s1.t_len() == 5);

    const RolloutSet s2 = collect(sys, 3, 5, 1.0, 77);
    for (int i = 0; i < 3; ++i) {
        CHECK((s1.rollouts[i].inputs - s2.rollouts[i].inputs).norm() == 0.0);
        CHECK((s1.rollouts[i].outputs - s2.rollouts[i].outputs).norm() == 0.0);
        CHECK(s1.rollouts[i].seed == s2.rollouts[i].seed);
    }

    const RolloutSet quiet = collect(sys, 2, 4, 0.0, 5);
    CHECK(quiet.rollouts[0].inputs.norm() == 0.0);
    CHECK(quiet.rollouts[0].outputs.norm() == 0.0);
}

TEST_CASE("transfer_eval known values") {
    CHECK(std::abs(transfer_eval(scalar_sys(0, 1, 1, 0), Complex(1, 0))(0, 0) -
                   Complex(1, 0)) < 1e-12);
    CHECK(std::abs(transfer_eval(scalar_sys(0.5, 1, 1, 0), Complex(1, 0))(0, 0) -
                   Complex(2, 0)) < 1e-12);
    CHECK(std::abs(transfer_eval(scalar_sys(2, 1, 1, 0), Complex(-1, 0))(0, 0) -
                   Complex(-1.0 / 3.0, 0)) < 1e-12);
    CHECK_THROWS_AS(transfer_eval(scalar_sys(2, 1, 1, 0), Complex(2, 0)), PoleProximityError);
}

TEST_CASE("true_decomposition: block diagonal by inspection") {
    LtiSystem sys;
    sys.a = Mat::Zero(2, 2);
    sys.a.diagonal() << 2.0, 0.5;
    sys.b = Mat::Ones(2, 1);
    sys.c = Mat::Ones(1, 2);
    sys.d = Mat::Zero(1, 1);
    const Decomposition dec = true_decomposition(sys);
    // F(z) = 1/(z-2), Delta(z) = 1/(z-0.5).
    const Complex z(0.3, 0.7);
    CHECK(std::abs(transfer_eval(dec.unstable, z)(0, 0) - 1.0 / (z - 2.0)) < 1e-10);
    CHECK(std::abs(transfer_eval(dec.stable, z)(0, 0) - 1.0 / (z - 0.5)) < 1e-10);
}

TEST_CASE("true_decomposition: fully unstable system has empty stable part") {
    GenSpec spec;
    spec.n = 3;
    spec.k = 3;
    spec.d_scale = 0.4;
    const LtiSystem sys = generate_system(spec, 53);
    const Decomposition dec = true_decomposition(sys);
    CHECK(dec.stable.n() == 0);
    const CMat delta = transfer_eval(dec.stable, Complex(0.2, 0.4));
    CHECK((delta - sys.d.cast<Complex>()).norm() < 1e-14);
}

TEST_CASE("true_decomposition additivity on the unit circle") {
    GenSpec spec;
    spec.n = 8;
    spec.k = 2;
    spec.d_u = 2;
    spec.d_y = 2;
    const LtiSystem sys = generate_system(spec, 67);
    const Decomposition dec = true_decomposition(sys);
    for (int i = 0; i < 64; ++i) {
        const double th = 2.0 * M_PI * i / 64;
        const Complex z(std::cos(th), std::sin(th));
        const CMat whole = transfer_eval(sys, z);
        const CMat parts = transfer_eval(dec.unstable, z) + transfer_eval(dec.stable, z);
        CHECK((whole - parts).norm() <= 1e-8 * (1.0 + whole.norm()));
    }
}

TEST_CASE("closed_loop_matrix static and zero controllers") {
    const Mat m = closed_loop_matrix(scalar_sys(2, 1, 1, 0), static_gain(-2.0));
    CHECK(m.rows() == 1);
    CHECK(m(0, 0) == doctest::Approx(0.0));

    // Zero controller with one internal state preserves open-loop blocks.
    control::DynamicController zero;
    zero.a_k = Mat::Constant(1, 1, 0.3);
    zero.b_k = Mat::Zero(1, 1);
    zero.c_k = Mat::Zero(1, 1);
    zero.d_k = Mat::Zero(1, 1);
    const Mat m2 = closed_loop_matrix(scalar_sys(2, 1, 1, 0), zero);
    CHECK(m2(0, 0) == doctest::Approx(2.0));
    CHECK(m2(1, 1) == doctest::Approx(0.3));
    CHECK(m2(0, 1) == doctest::Approx(0.0));
    CHECK(m2(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("closed loop radius agrees with simulated decay rate") {
    // Observer controller on the scalar plant a=2: place poles via gains.
    const LtiSystem sys = scalar_sys(2, 1, 1, 0);
    control::DynamicController obs;
    const double kc = 1.8, lo = 1.9;
    obs.a_k = Mat::Constant(1, 1, 2.0 - kc - lo);
    obs.b_k = Mat::Constant(1, 1, lo);
    obs.c_k = Mat::Constant(1, 1, -kc);
    obs.d_k = Mat::Zero(1, 1);
    const Mat m = closed_loop_matrix(sys, obs);
    const double radius = numerics::spectral_radius(m);
    CHECK(radius < 1.0);

    Vec x0(1);
    x0 << 1.0;
    const Vec norms = closed_loop_sim_norms(sys, obs, x0, 60);
    // Fitted decay rate over the tail matches the radius.
    const double rate = std::pow(norms(60) / norms(20), 1.0 / 40.0);
    CHECK(rate == doctest::Approx(radius).epsilon(0.02));
}

TEST_CASE("closed loop stability iff simulated decay (random pairs)") {
    Rng rng(91);
    int checked = 0;
    std::uint64_t seed = 0;
    while (checked < 50) {
        ++seed;
        GenSpec spec;
        spec.n = 2 + static_cast<int>(rng.uniform01() * 3);
        spec.k = 1;
        const LtiSystem sys = generate_system(spec, derive_seed(1234, seed));
        control::DynamicController ctrl;
        const int nk = 1 + static_cast<int>(rng.uniform01() * 2);
        ctrl.a_k = rng.normal_mat(nk, nk, 0.5);
        ctrl.b_k = rng.normal_mat(nk, 1);
        ctrl.c_k = rng.normal_mat(1, nk);
        ctrl.d_k = rng.normal_mat(1, 1);
        const double radius = numerics::spectral_radius(closed_loop_matrix(sys, ctrl));
        if (radius >= 0.98 && radius <= 1.02) continue;
        ++checked;
        Vec x0 = rng.normal_vec(sys.n());
        x0.normalize();
        const Vec norms = closed_loop_sim_norms(sys, ctrl, x0, 500);
        // A decaying loop ends below its start; a diverging one ends above.
        if (radius < 1.0)
            CHECK(norms(500) < norms(0));
        else
            CHECK(norms(500) > norms(0));
    }
}

TEST_CASE("well-posedness guard for algebraic loops") {
    const LtiSystem sys = scalar_sys(0.5, 1, 1, 1.0);  // D = 1
    CHECK_THROWS_AS(closed_loop_matrix(sys, static_gain(1.0)), WellPosednessError);
}
