#include "ltsp/control.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "ltsp/errors.hpp"
#include "ltsp/numerics.hpp"
#include "ltsp/rng.hpp"

namespace ltsp::control {

void FreqGrid::validate() const {
    if (n_points < 64) throw ParameterError("FreqGrid: n_points must be >= 64");
    if (!(tol > 0.0)) throw ParameterError("FreqGrid: tol must be > 0");
    if (refine_iters < 0) throw ParameterError("FreqGrid: refine_iters must be >= 0");
}

namespace {

// Frequency-response evaluator. Diagonalizes A once so each grid point costs
// O(n d_u d_y) instead of an O(n^3) solve; falls back to per-point LU when A
// is too close to defective for the modal route to be trustworthy.
class TransferEvaluator {
   public:
    explicit TransferEvaluator(const lti::LtiSystem& ss) : ss_(ss) {
        const int n = ss.n();
        if (n == 0) return;
        Eigen::EigenSolver<Mat> dec(ss.a);
        if (dec.info() != Eigen::Success) return;
        const CMat v = dec.eigenvectors();
        Eigen::FullPivLU<CMat> lu(v);
        if (!lu.isInvertible()) return;
        const CMat recon = v * dec.eigenvalues().asDiagonal() * lu.inverse();
        if ((recon - ss.a.cast<Complex>()).norm() > 1e-9 * std::max(1.0, ss.a.norm())) return;
        poles_ = dec.eigenvalues();
        cv_ = ss.c.cast<Complex>() * v;
        vb_ = lu.solve(ss.b.cast<Complex>());
        modal_ = true;
    }

    CMat eval(Complex z) const {
        const int n = ss_.n();
        if (n == 0) return ss_.d.cast<Complex>();
        if (modal_) {
            CMat g = ss_.d.cast<Complex>();
            for (int i = 0; i < n; ++i) g += cv_.col(i) * (vb_.row(i) / (z - poles_(i)));
            return g;
        }
        CMat zi_a = -ss_.a.cast<Complex>();
        zi_a.diagonal().array() += z;
        return ss_.c.cast<Complex>() * zi_a.partialPivLu().solve(ss_.b.cast<Complex>()) +
               ss_.d.cast<Complex>();
    }

    double gain(double theta) const {
        const CMat g = eval(Complex(std::cos(theta), std::sin(theta)));
        if (g.rows() == 1 && g.cols() == 1) return std::abs(g(0, 0));
        return Eigen::JacobiSVD<CMat>(g).singularValues()(0);
    }

   private:
    const lti::LtiSystem& ss_;
    bool modal_ = false;
    CVec poles_;
    CMat cv_, vb_;
};

double golden_section_max(const TransferEvaluator& ev, double lo, double hi, double tol,
                          int max_iters) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = ev.gain(x1), f2 = ev.gain(x2);
    for (int it = 0; it < max_iters && (b - a) > tol; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = ev.gain(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = ev.gain(x1);
        }
    }
    return std::max(f1, f2);
}

}  // namespace

double hinf_norm(const lti::LtiSystem& ss, const FreqGrid& grid) {
    ss.validate();
    grid.validate();
    if (ss.n() > 0 && numerics::spectral_radius(ss.a) >= 1.0)
        throw UnstablePlantError("hinf_norm: spectral radius >= 1, norm is infinite");
    TransferEvaluator ev(ss);
    if (ss.n() == 0) return ev.gain(0.0);

    const int n = grid.n_points;
    Vec gains(n);
    for (int i = 0; i < n; ++i) gains(i) = ev.gain(M_PI * i / (n - 1));
    double best = gains.maxCoeff();

    // Refine around the three largest grid values.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + std::min(n, 3), order.end(),
                      [&](int a, int b) { return gains(a) > gains(b); });
    const double step = M_PI / (n - 1);
    for (int c = 0; c < std::min(n, 3); ++c) {
        const int i = order[c];
        const double lo = std::max(0.0, (i - 1) * step);
        const double hi = std::min(M_PI, (i + 1) * step);
        best = std::max(best, golden_section_max(ev, lo, hi, grid.tol * M_PI, grid.refine_iters));
    }
    return best;
}

lti::LtiSystem series_sensitivity(const sysid::ReducedModel& model, const DynamicController& ctrl) {
    const int k = model.k;
    const int nk = ctrl.order();
    const int d_u = static_cast<int>(model.b1.cols());
    const int d_y = static_cast<int>(model.c1.rows());
    if (ctrl.b_k.cols() != d_y || ctrl.c_k.rows() != d_u || ctrl.d_k.rows() != d_u ||
        ctrl.d_k.cols() != d_y)
        throw DimensionError("series_sensitivity: controller I/O does not match model");

    // F has no feedthrough, so the loop u = K (F u + w) is always well posed:
    //   x+  = (n1 + b1 D_K c1) x + b1 C_K xi + b1 D_K w
    //   xi+ = B_K c1 x + A_K xi + B_K w
    //   u   = D_K c1 x + C_K xi + D_K w
    lti::LtiSystem ss;
    ss.a = Mat(k + nk, k + nk);
    ss.a.topLeftCorner(k, k) = model.n1 + model.b1 * ctrl.d_k * model.c1;
    ss.a.topRightCorner(k, nk) = model.b1 * ctrl.c_k;
    ss.a.bottomLeftCorner(nk, k) = ctrl.b_k * model.c1;
    ss.a.bottomRightCorner(nk, nk) = ctrl.a_k;
    ss.b = Mat(k + nk, d_y);
    ss.b.topRows(k) = model.b1 * ctrl.d_k;
    ss.b.bottomRows(nk) = ctrl.b_k;
    ss.c = Mat(d_u, k + nk);
    ss.c.leftCols(k) = ctrl.d_k * model.c1;
    ss.c.rightCols(nk) = ctrl.c_k;
    ss.d = ctrl.d_k;
    return ss;
}

std::vector<double> SynthesisOptions::default_ladder() {
    std::vector<double> ladder(13);
    for (int i = 0; i < 13; ++i) ladder[i] = std::pow(10.0, -3.0 + 0.5 * i);
    return ladder;
}

namespace {

DynamicController observer_controller(const sysid::ReducedModel& model, const Mat& state_gain,
                                      const Mat& obs_gain) {
    DynamicController ctrl;
    ctrl.a_k = model.n1 - model.b1 * state_gain - obs_gain * model.c1;
    ctrl.b_k = obs_gain;
    ctrl.c_k = -state_gain;
    ctrl.d_k = Mat::Zero(model.b1.cols(), model.c1.rows());
    return ctrl;
}

double model_loop_radius(const sysid::ReducedModel& model, const DynamicController& ctrl) {
    return numerics::spectral_radius(
        lti::closed_loop_matrix(model.as_system(/*include_d=*/false), ctrl));
}

}  // namespace

DynamicController synthesize(const sysid::ReducedModel& model, const SynthesisOptions& opts) {
    const std::vector<double> ladder =
        opts.weight_ladder.empty() ? SynthesisOptions::default_ladder() : opts.weight_ladder;
    const int k = model.k;
    const int d_u = static_cast<int>(model.b1.cols());
    const int d_y = static_cast<int>(model.c1.rows());

    std::vector<SweepEntry> log;
    std::optional<DynamicController> best;
    double best_cert = 0.0;

    // radius: for the observer structure the loop matrix is similar to
    // blkdiag(n1 - b1 K, n1 - L c1), so the sweep radius comes from the two
    // small factors; that similarity is also far better conditioned than an
    // eigensolve of the assembled loop matrix at high gains.
    auto consider = [&](DynamicController cand, double rho, double mu, double radius) {
        SweepEntry entry;
        entry.rho = rho;
        entry.mu = mu;
        entry.closed_loop_radius = radius;
        entry.stabilizing = radius < 1.0;
        if (entry.stabilizing) {
            entry.certificate = hinf_norm(series_sensitivity(model, cand), opts.grid);
            if (!best || entry.certificate < best_cert) {
                best_cert = entry.certificate;
                best = std::move(cand);
            }
        }
        log.push_back(entry);
    };

    // A zero controller is admissible whenever the model is already stable;
    // it enters the sweep first so certificate ties resolve to it.
    const double open_radius = numerics::spectral_radius(model.n1);
    if (open_radius < 1.0) {
        DynamicController zero;
        zero.a_k = Mat(0, 0);
        zero.b_k = Mat(0, d_y);
        zero.c_k = Mat(d_u, 0);
        zero.d_k = Mat::Zero(d_u, d_y);
        consider(std::move(zero), 0.0, 0.0, open_radius);
    }

    const Mat eye_k = Mat::Identity(k, k);
    const Mat eye_u = Mat::Identity(d_u, d_u);
    const Mat eye_y = Mat::Identity(d_y, d_y);

    // The observer gains depend only on mu; compute them once per ladder
    // point.
    std::vector<std::optional<Mat>> obs_gains(ladder.size());
    std::vector<double> obs_radius(ladder.size(), 0.0);
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        try {
            const Mat po = numerics::solve_dare(model.n1.transpose(), model.c1.transpose(),
                                                ladder[j] * eye_k, eye_y);
            const Mat gain = (model.c1 * po * model.c1.transpose() + eye_y)
                                 .ldlt()
                                 .solve(model.c1 * po * model.n1.transpose())
                                 .transpose();
            obs_radius[j] = numerics::spectral_radius(model.n1 - gain * model.c1);
            obs_gains[j] = gain;
        } catch (const Error&) {
        }
    }

    for (double rho : ladder) {
        Mat state_gain;
        double sf_radius = 0.0;
        try {
            const Mat p = numerics::solve_dare(model.n1, model.b1, rho * eye_k, eye_u);
            state_gain = (model.b1.transpose() * p * model.b1 + eye_u)
                             .ldlt()
                             .solve(model.b1.transpose() * p * model.n1);
            sf_radius = numerics::spectral_radius(model.n1 - model.b1 * state_gain);
        } catch (const Error&) {
            for (double mu : ladder) log.push_back({rho, mu, false, 0.0, 0.0});
            continue;
        }
        for (std::size_t j = 0; j < ladder.size(); ++j) {
            if (!obs_gains[j]) {
                log.push_back({rho, ladder[j], false, 0.0, 0.0});
                continue;
            }
            consider(observer_controller(model, state_gain, *obs_gains[j]), rho, ladder[j],
                     std::max(sf_radius, obs_radius[j]));
        }
    }

    if (!best) {
        std::string msg = "synthesize: no sweep point internally stabilizes the model (" +
                          std::to_string(log.size()) + " points tried)";
        throw SynthesisInfeasibleError(msg);
    }
    best->certificate = best_cert;
    best->design_log = std::move(log);
    return *best;
}

SmallGainCertificate certify_small_gain(const sysid::ReducedModel& model,
                                        const DynamicController& ctrl,
                                        std::optional<double> delta_bound, const FreqGrid& grid) {
    if (model_loop_radius(model, ctrl) >= 1.0)
        throw UnstablePlantError("certify_small_gain: controller does not internally stabilize "
                                 "the model");
    SmallGainCertificate cert;
    cert.certificate = hinf_norm(series_sensitivity(model, ctrl), grid);
    if (delta_bound) {
        if (*delta_bound < 0.0)
            throw ParameterError("certify_small_gain: delta_bound must be >= 0");
        cert.delta_hinf_bound = *delta_bound;
        cert.small_gain_margin = 1.0 - cert.certificate * (*delta_bound);
        cert.guaranteed = *cert.small_gain_margin > 0.0;
    }
    return cert;
}

StabilizationReport verify_on_plant(const lti::LtiSystem& sys, const DynamicController& ctrl,
                                    std::uint64_t sim_seed) {
    StabilizationReport report;
    report.closed_loop_radius = numerics::spectral_radius(lti::closed_loop_matrix(sys, ctrl));
    report.stabilized = report.closed_loop_radius < 1.0 - 1e-9;
    report.certificate = ctrl.certificate;

    Rng rng(sim_seed);
    Vec x0 = rng.normal_vec(sys.n());
    if (x0.norm() == 0.0) x0.setOnes();
    x0.normalize();
    const Vec norms = lti::closed_loop_sim_norms(sys, ctrl, x0, 500);
    report.sim_decay_check = norms(norms.size() - 1) < norms(0);

    try {
        const auto dec = lti::true_decomposition(sys);
        const double delta_norm = hinf_norm(dec.stable);
        report.delta_hinf_bound = delta_norm;
        report.small_gain_margin = 1.0 - report.certificate * delta_norm;
        report.guaranteed = *report.small_gain_margin > 0.0;
    } catch (const Error&) {
        // Oracle unavailable (marginal eigenvalues or unstable Delta); the
        // report still carries radius and simulation evidence.
    }
    return report;
}

DynamicController fold_feedthrough(const DynamicController& ctrl, const Mat& d_hat) {
    if (d_hat.rows() != ctrl.b_k.cols() || d_hat.cols() != ctrl.c_k.rows())
        throw DimensionError("fold_feedthrough: d_hat must be d_y x d_u");
    if (d_hat.isZero(0.0)) return ctrl;
    const int d_u = static_cast<int>(d_hat.cols());
    const Mat loop = Mat::Identity(d_u, d_u) + ctrl.d_k * d_hat;
    Eigen::FullPivLU<Mat> lu(loop);
    if (!lu.isInvertible())
        throw WellPosednessError("fold_feedthrough: I + D_K d_hat is singular");
    const Mat lam_ck = lu.solve(ctrl.c_k);
    const Mat lam_dk = lu.solve(ctrl.d_k);
    DynamicController folded;
    folded.a_k = ctrl.a_k - ctrl.b_k * d_hat * lam_ck;
    folded.b_k = ctrl.b_k * (Mat::Identity(d_hat.rows(), d_hat.rows()) - d_hat * lam_dk);
    folded.c_k = lam_ck;
    folded.d_k = lam_dk;
    folded.certificate = ctrl.certificate;
    folded.design_log = ctrl.design_log;
    return folded;
}

}  // namespace ltsp::control
