#include "ltsp/lti.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "ltsp/errors.hpp"
#include "ltsp/numerics.hpp"
#include "ltsp/rng.hpp"

namespace ltsp::lti {

void LtiSystem::validate() const {
    if (a.rows() != a.cols()) throw DimensionError("LtiSystem: a must be square");
    if (b.rows() != a.rows()) throw DimensionError("LtiSystem: b row count must match a");
    if (c.cols() != a.rows()) throw DimensionError("LtiSystem: c column count must match a");
    if (d.rows() != c.rows() || d.cols() != b.cols())
        throw DimensionError("LtiSystem: d must be d_y x d_u");
    if (!a.allFinite() || !b.allFinite() || !c.allFinite() || !d.allFinite())
        throw ParameterError("LtiSystem: entries must be finite");
    if (sigma_w < 0 || sigma_v < 0) throw ParameterError("LtiSystem: noise stds must be >= 0");
}

void GenSpec::validate() const {
    if (n < 1) throw ParameterError("GenSpec: n must be >= 1");
    if (k < 1 || k > n) throw ParameterError("GenSpec: require 0 < k <= n");
    if (!(unstable_min > 1.0) || unstable_max < unstable_min)
        throw ParameterError("GenSpec: unstable_range must lie in (1, inf)");
    if (stable_min < 0.0 || stable_max >= 1.0 || stable_max < stable_min)
        throw ParameterError("GenSpec: stable_range must lie in [0, 1)");
    if (d_u < 1 || d_y < 1) throw ParameterError("GenSpec: d_u, d_y must be >= 1");
    if (basis_conditioning_cap < 1.0)
        throw ParameterError("GenSpec: basis_conditioning_cap must be >= 1");
    if (sigma_w < 0 || sigma_v < 0 || d_scale < 0)
        throw ParameterError("GenSpec: noise and d scales must be >= 0");
    if (stable_coupling < 0) throw ParameterError("GenSpec: stable_coupling must be >= 0");
}

LtiSystem generate_system(const GenSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);

    Vec lambdas(spec.n);
    for (int i = 0; i < spec.k; ++i) lambdas(i) = rng.uniform(spec.unstable_min, spec.unstable_max);
    for (int i = spec.k; i < spec.n; ++i) lambdas(i) = rng.uniform(spec.stable_min, spec.stable_max);

    Mat q;
    bool found = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
        q = rng.normal_mat(spec.n, spec.n);
        const Vec sv = numerics::svd(q).s;
        if (sv(sv.size() - 1) > 0.0 && sv(0) / sv(sv.size() - 1) <= spec.basis_conditioning_cap) {
            found = true;
            break;
        }
    }
    if (!found)
        throw GenerationError("generate_system: no basis met the conditioning cap in 100 draws");

    LtiSystem sys;
    const Mat q_inv = q.partialPivLu().solve(Mat::Identity(spec.n, spec.n));
    sys.a = q * lambdas.asDiagonal() * q_inv;
    sys.b = rng.normal_mat(spec.n, spec.d_u);
    sys.c = rng.normal_mat(spec.d_y, spec.n);
    if (spec.stable_coupling != 1.0 && spec.k < spec.n) {
        // Rescale only the stable-subspace components, in the planted basis.
        const auto q2 = q.rightCols(spec.n - spec.k);
        const auto r2 = q_inv.bottomRows(spec.n - spec.k);
        sys.b += (spec.stable_coupling - 1.0) * q2 * (r2 * sys.b);
        sys.c += (spec.stable_coupling - 1.0) * (sys.c * q2) * r2;
    }
    sys.d = spec.d_scale > 0.0 ? Mat(rng.normal_mat(spec.d_y, spec.d_u, spec.d_scale))
                               : Mat(Mat::Zero(spec.d_y, spec.d_u));
    sys.sigma_w = spec.sigma_w;
    sys.sigma_v = spec.sigma_v;
    return sys;
}

Rollout simulate_rollout(const LtiSystem& sys, const Mat& inputs, std::uint64_t seed) {
    sys.validate();
    if (inputs.rows() != sys.d_u())
        throw DimensionError("simulate_rollout: inputs must have d_u rows");
    const int t_len = static_cast<int>(inputs.cols());
    Rng rng(seed);

    Rollout roll;
    roll.inputs = inputs;
    roll.outputs = Mat(sys.d_y(), t_len);
    roll.seed = seed;

    Vec x = Vec::Zero(sys.n());
    for (int t = 0; t < t_len; ++t) {
        const Vec w = sys.sigma_w > 0 ? Vec(rng.normal_vec(sys.n(), sys.sigma_w))
                                      : Vec(Vec::Zero(sys.n()));
        const Vec v = sys.sigma_v > 0 ? Vec(rng.normal_vec(sys.d_y(), sys.sigma_v))
                                      : Vec(Vec::Zero(sys.d_y()));
        roll.outputs.col(t) = sys.c * x + sys.d * inputs.col(t) + v;
        x = sys.a * x + sys.b * inputs.col(t) + w;
        if (x.norm() > 1e100)
            throw BlowUpError("simulate_rollout: state norm exceeded 1e100 at step " +
                                  std::to_string(t),
                              t);
    }
    return roll;
}

RolloutSet collect(const LtiSystem& sys, int m_rollouts, int t_len, double sigma_u,
                   std::uint64_t seed) {
    if (m_rollouts < 1 || t_len < 1) throw ParameterError("collect: require M >= 1 and T >= 1");
    if (!(sigma_u >= 0)) throw ParameterError("collect: sigma_u must be >= 0");
    RolloutSet set;
    set.sigma_u = sigma_u;
    set.rollouts.reserve(m_rollouts);
    for (int i = 0; i < m_rollouts; ++i) {
        const std::uint64_t rollout_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        Rng input_rng(derive_seed(rollout_seed, 0));
        const Mat inputs = input_rng.normal_mat(sys.d_u(), t_len, sigma_u);
        try {
            Rollout roll = simulate_rollout(sys, inputs, derive_seed(rollout_seed, 1));
            roll.seed = rollout_seed;
            set.rollouts.push_back(std::move(roll));
        } catch (const BlowUpError& e) {
            throw BlowUpError("collect: rollout " + std::to_string(i) + ": " + e.what(), e.step);
        }
    }
    return set;
}

CMat transfer_eval(const LtiSystem& sys, Complex z) {
    sys.validate();
    const int n = sys.n();
    if (n == 0) return sys.d.cast<Complex>();
    CMat zi_a = -sys.a.cast<Complex>();
    zi_a.diagonal().array() += z;
    Eigen::PartialPivLU<CMat> lu(zi_a);
    // |det(zI-A)| = prod |lambda_i(zI-A)|; a tiny relative pivot product means
    // z sits next to a pole.
    const CMat& lu_mat = lu.matrixLU();
    double min_pivot = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) min_pivot = std::min(min_pivot, std::abs(lu_mat(i, i)));
    const double scale = std::max(1.0, zi_a.norm());
    if (!(min_pivot > 1e-12 * scale))
        throw PoleProximityError("transfer_eval: zI - A is near singular at z = (" +
                                 std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
    return sys.c.cast<Complex>() * lu.solve(sys.b.cast<Complex>()) + sys.d.cast<Complex>();
}

Mat markov_parameters(const LtiSystem& sys, int count) {
    sys.validate();
    if (count < 1) throw ParameterError("markov_parameters: count must be >= 1");
    Mat phi(sys.d_y(), count * sys.d_u());
    phi.leftCols(sys.d_u()) = sys.d;
    Mat power_b = sys.b;  // A^{j-1} B
    for (int j = 1; j < count; ++j) {
        phi.middleCols(j * sys.d_u(), sys.d_u()) = sys.c * power_b;
        power_b = sys.a * power_b;
    }
    return phi;
}

Decomposition true_decomposition(const LtiSystem& sys) {
    sys.validate();
    const auto split = numerics::schur_split_unstable(sys.a);
    Decomposition dec;
    dec.unstable.a = split.n1;
    dec.unstable.b = split.r1 * sys.b;
    dec.unstable.c = sys.c * split.q1;
    dec.unstable.d = Mat::Zero(sys.d_y(), sys.d_u());
    dec.stable.a = split.n2;
    dec.stable.b = split.r2 * sys.b;
    dec.stable.c = sys.c * split.q2;
    dec.stable.d = sys.d;
    return dec;
}

namespace {

// Feedback wiring shared by closed_loop_matrix and the step simulator:
// u = Lam (D_K C x + C_K xi),  Lam = (I - D_K D)^{-1}.
struct LoopGains {
    Mat lam_dk_c;  // d_u x n
    Mat lam_ck;    // d_u x n_K
};

LoopGains wire_loop(const LtiSystem& sys, const control::DynamicController& ctrl) {
    if (ctrl.b_k.cols() != sys.d_y() || ctrl.c_k.rows() != sys.d_u())
        throw DimensionError("closed loop: controller I/O dimensions do not match plant");
    const Mat loop = Mat::Identity(sys.d_u(), sys.d_u()) - ctrl.d_k * sys.d;
    Eigen::FullPivLU<Mat> lu(loop);
    if (!lu.isInvertible())
        throw WellPosednessError("closed loop: algebraic loop I - D_K D is singular");
    LoopGains g;
    g.lam_dk_c = lu.solve(ctrl.d_k * sys.c);
    g.lam_ck = lu.solve(ctrl.c_k);
    return g;
}

}  // namespace

Mat closed_loop_matrix(const LtiSystem& sys, const control::DynamicController& ctrl) {
    sys.validate();
    const LoopGains g = wire_loop(sys, ctrl);
    const int n = sys.n();
    const int nk = ctrl.order();
    Mat m(n + nk, n + nk);
    m.topLeftCorner(n, n) = sys.a + sys.b * g.lam_dk_c;
    m.topRightCorner(n, nk) = sys.b * g.lam_ck;
    m.bottomLeftCorner(nk, n) = ctrl.b_k * (sys.c + sys.d * g.lam_dk_c);
    m.bottomRightCorner(nk, nk) = ctrl.a_k + ctrl.b_k * sys.d * g.lam_ck;
    return m;
}

Vec closed_loop_sim_norms(const LtiSystem& sys, const control::DynamicController& ctrl,
                          const Vec& x0, int steps) {
    sys.validate();
    if (x0.size() != sys.n()) throw DimensionError("closed_loop_sim_norms: x0 must have n entries");
    const LoopGains g = wire_loop(sys, ctrl);
    Vec x = x0;
    Vec xi = Vec::Zero(ctrl.order());
    Vec norms(steps + 1);
    norms(0) = std::sqrt(x.squaredNorm() + xi.squaredNorm());
    for (int t = 0; t < steps; ++t) {
        const Vec u = g.lam_dk_c * x + g.lam_ck * xi;
        const Vec y = sys.c * x + sys.d * u;
        const Vec x_next = sys.a * x + sys.b * u;
        const Vec xi_next = ctrl.a_k * xi + ctrl.b_k * y;
        x = x_next;
        xi = xi_next;
        norms(t + 1) = std::sqrt(x.squaredNorm() + xi.squaredNorm());
        if (!(norms(t + 1) < 1e100)) {
            // Saturate instead of throwing: verification reports divergence.
            for (int rest = t + 1; rest <= steps; ++rest) norms(rest) = 1e100;
            break;
        }
    }
    return norms;
}

}  // namespace ltsp::lti
