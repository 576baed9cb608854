#include "ltsp/sysid.hpp"

#include <cmath>
#include <limits>

#include "ltsp/errors.hpp"
#include "ltsp/numerics.hpp"

namespace ltsp::sysid {

Mat MarkovEstimate::block(int j) const {
    if (j < 1 || j > t_len) throw ParameterError("MarkovEstimate::block: j out of range 1..T");
    return phi.middleCols((j - 1) * d_u, d_u);
}

Mat toeplitz_inputs(const lti::Rollout& rollout) {
    const int t_len = rollout.t_len();
    const int d_u = static_cast<int>(rollout.inputs.rows());
    if (t_len < 1) throw ParameterError("toeplitz_inputs: rollout must have length >= 1");
    Mat u = Mat::Zero(t_len * d_u, t_len);
    for (int col = 0; col < t_len; ++col)
        for (int row = 0; row <= col; ++row)
            u.block(row * d_u, col, d_u, 1) = rollout.inputs.col(col - row);
    return u;
}

MarkovEstimate estimate_markov(const lti::RolloutSet& data) {
    if (data.rollouts.empty()) throw ParameterError("estimate_markov: empty rollout set");
    const int m_rollouts = data.count();
    const int t_len = data.t_len();
    const int d_u = data.d_u();
    const int d_y = data.d_y();
    for (const auto& r : data.rollouts)
        if (r.t_len() != t_len || r.inputs.rows() != d_u || r.outputs.rows() != d_y)
            throw DimensionError("estimate_markov: rollouts disagree on T / d_u / d_y");

    Mat u_stack(t_len * d_u, m_rollouts * t_len);
    Mat y_stack(d_y, m_rollouts * t_len);
    for (int i = 0; i < m_rollouts; ++i) {
        u_stack.middleCols(i * t_len, t_len) = toeplitz_inputs(data.rollouts[i]);
        y_stack.middleCols(i * t_len, t_len) = data.rollouts[i].outputs;
    }

    MarkovEstimate est;
    try {
        est.phi = numerics::lstsq_right(y_stack, u_stack);
    } catch (const RankDeficiencyError& e) {
        throw RankDeficiencyError("estimate_markov (M=" + std::to_string(m_rollouts) +
                                      ", T=" + std::to_string(t_len) +
                                      ", d_u=" + std::to_string(d_u) + "): " + e.what(),
                                  e.sv_ratio);
    }
    est.d_hat = est.phi.leftCols(d_u);
    est.m_rollouts = m_rollouts;
    est.t_len = t_len;
    est.sigma_u = data.sigma_u;
    est.d_u = d_u;
    est.d_y = d_y;
    return est;
}

HankelEstimate assemble_hankel(const MarkovEstimate& phi, int m, int p, int q) {
    if (m < 0 || m % 2 != 0) throw ParameterError("assemble_hankel: m must be even and >= 0");
    if (p < 1 || q < 1) throw ParameterError("assemble_hankel: p, q must be >= 1");
    if (m + p + q > phi.t_len)
        throw ParameterError("assemble_hankel: index range requires m + p + q <= T (m=" +
                             std::to_string(m) + ", p=" + std::to_string(p) +
                             ", q=" + std::to_string(q) + ", T=" + std::to_string(phi.t_len) + ")");
    HankelEstimate h;
    h.m = m;
    h.p = p;
    h.q = q;
    h.d_u = phi.d_u;
    h.d_y = phi.d_y;
    h.h = Mat(p * phi.d_y, q * phi.d_u);
    for (int i = 1; i <= p; ++i)
        for (int j = 1; j <= q; ++j)
            h.h.block((i - 1) * phi.d_y, (j - 1) * phi.d_u, phi.d_y, phi.d_u) =
                phi.block(i + j + m);
    h.svals = numerics::svd(h.h).s;
    return h;
}

OrderDetection detect_order(const Vec& svals, int k_max) {
    if (svals.size() < 2) throw ParameterError("detect_order: need at least 2 singular values");
    for (int i = 1; i < svals.size(); ++i)
        if (svals(i) > svals(i - 1))
            throw ParameterError("detect_order: singular values must be nonincreasing");
    if (svals(0) < 1e-12)
        throw DegenerateHankelError("detect_order: all singular values below 1e-12");

    const int top = std::min<int>(k_max, static_cast<int>(svals.size()) - 1);
    if (top < 1) throw ParameterError("detect_order: k_max must be >= 1");
    OrderDetection det;
    det.k = 1;
    det.gap_ratio = 0.0;
    for (int i = 1; i <= top; ++i) {
        const double lo = svals(i);
        const double ratio = lo > 0.0 ? svals(i - 1) / lo
                                      : (svals(i - 1) > 0.0
                                             ? std::numeric_limits<double>::infinity()
                                             : 0.0);
        if (ratio > det.gap_ratio) {
            det.gap_ratio = ratio;
            det.k = i;
        }
    }
    det.weak_gap = det.gap_ratio < 10.0;
    return det;
}

LowRankFactors factor_rank_k(const HankelEstimate& h, int k) {
    if (k < 1 || k > std::min(h.p * h.d_y, h.q * h.d_u))
        throw ParameterError("factor_rank_k: require 1 <= k <= min(p d_y, q d_u), got k=" +
                             std::to_string(k));
    const auto dec = numerics::svd(h.h);
    if (dec.s(k - 1) < 1e-12)
        throw RankDeficiencyError("factor_rank_k: sigma_k below 1e-12, rank deficient truncation",
                                  dec.s(k - 1));
    LowRankFactors f;
    f.k = k;
    f.sigma_top = dec.s.head(k);
    const Vec sqrt_s = f.sigma_top.cwiseSqrt();
    f.o_hat = dec.u.leftCols(k) * sqrt_s.asDiagonal();
    f.c_hat = sqrt_s.asDiagonal() * dec.vt.topRows(k);
    f.gap_ratio = k < dec.s.size() && dec.s(k) > 0.0
                      ? dec.s(k - 1) / dec.s(k)
                      : std::numeric_limits<double>::infinity();
    f.m = h.m;
    f.p = h.p;
    f.q = h.q;
    f.d_u = h.d_u;
    f.d_y = h.d_y;
    return f;
}

namespace {

Mat o_rows(const LowRankFactors& f, int first, int last) {  // 1-indexed block rows
    return f.o_hat.middleRows((first - 1) * f.d_y, (last - first + 1) * f.d_y);
}

Mat c_cols(const LowRankFactors& f, int first, int last) {  // 1-indexed block cols
    return f.c_hat.middleCols((first - 1) * f.d_u, (last - first + 1) * f.d_u);
}

Mat guarded_inverse(const Mat& power_est, const char* which) {
    const Vec sv = numerics::svd(power_est).s;
    if (sv(sv.size() - 1) < 1e-10 * sv(0))
        throw ExtractionSingularityError(std::string("extract_model: ") + which +
                                         " m/2-power estimate is numerically singular");
    return power_est.partialPivLu().solve(Mat::Identity(power_est.rows(), power_est.cols()));
}

}  // namespace

ReducedModel extract_model(const LowRankFactors& f, const Mat& d_hat) {
    if (f.p < 2) throw ParameterError("extract_model: shift regression requires p >= 2");
    const int half = f.m / 2;
    if (f.p < half + 1 || f.q < half + 1)
        throw ParameterError("extract_model: power regressions require p >= m/2 + 1 and "
                             "q >= m/2 + 1");
    if (d_hat.rows() != f.d_y || d_hat.cols() != f.d_u)
        throw DimensionError("extract_model: d_hat must be d_y x d_u");

    ReducedModel model;
    model.k = f.k;
    model.m = f.m;
    model.sigma_top = f.sigma_top;
    model.gap_ratio = f.gap_ratio;
    model.d_hat = d_hat;

    model.n1 = numerics::lstsq_left(o_rows(f, 1, f.p - 1), o_rows(f, 2, f.p));
    if (f.m > 0) {
        const Mat pow_o = numerics::lstsq_left(o_rows(f, 1, f.p - half), o_rows(f, half + 1, f.p));
        const Mat pow_c = numerics::lstsq_right(c_cols(f, half + 1, f.q), c_cols(f, 1, f.q - half));
        model.shift_mismatch = (pow_o - pow_c).norm();
        model.c1 = o_rows(f, 1, 1) * guarded_inverse(pow_o, "observability-side");
        model.b1 = guarded_inverse(pow_c, "controllability-side") * c_cols(f, 1, 1);
    } else {
        model.shift_mismatch = 0.0;
        model.c1 = o_rows(f, 1, 1);
        model.b1 = c_cols(f, 1, 1);
    }
    model.n1_eigenvalues = numerics::eigenvalues(model.n1);
    return model;
}

lti::LtiSystem ReducedModel::as_system(bool include_d) const {
    lti::LtiSystem sys;
    sys.a = n1;
    sys.b = b1;
    sys.c = c1;
    sys.d = include_d ? d_hat : Mat(Mat::Zero(c1.rows(), b1.cols()));
    return sys;
}

namespace {

template <typename Fn>
auto staged(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const RankDeficiencyError& e) {
        throw RankDeficiencyError(std::string(stage) + ": " + e.what(), e.sv_ratio);
    } catch (const ParameterError& e) {
        throw ParameterError(std::string(stage) + ": " + e.what());
    }
}

}  // namespace

ReducedModel identify(const lti::RolloutSet& data, const IdentifyConfig& cfg) {
    // Validate the whole parameter chain before the expensive least squares.
    const int t_len = data.t_len();
    if (cfg.m < 0 || cfg.m % 2 != 0)
        throw ParameterError("identify: m must be even and >= 0");
    if (cfg.p < 1 || cfg.q < 1) throw ParameterError("identify: p, q must be >= 1");
    if (cfg.m + cfg.p + cfg.q > t_len)
        throw ParameterError("identify: index range requires m + p + q <= T (m=" +
                             std::to_string(cfg.m) + ", p=" + std::to_string(cfg.p) +
                             ", q=" + std::to_string(cfg.q) + ", T=" + std::to_string(t_len) + ")");
    if (cfg.p < 2) throw ParameterError("identify: extraction requires p >= 2");
    if (cfg.p < cfg.m / 2 + 1 || cfg.q < cfg.m / 2 + 1)
        throw ParameterError("identify: extraction requires p >= m/2 + 1 and q >= m/2 + 1");
    if (cfg.k && (*cfg.k < 1 || *cfg.k > std::min(cfg.p * data.d_y(), cfg.q * data.d_u())))
        throw ParameterError("identify: require 1 <= k <= min(p d_y, q d_u)");

    const MarkovEstimate markov = staged("identify/markov", [&] { return estimate_markov(data); });
    const HankelEstimate hank =
        staged("identify/hankel", [&] { return assemble_hankel(markov, cfg.m, cfg.p, cfg.q); });
    int k;
    if (cfg.k) {
        k = *cfg.k;
    } else {
        k = staged("identify/order", [&] {
                return detect_order(hank.svals, std::min(cfg.p, cfg.q) - 1);
            }).k;
    }
    const LowRankFactors factors =
        staged("identify/factor", [&] { return factor_rank_k(hank, k); });
    return staged("identify/extract", [&] { return extract_model(factors, markov.d_hat); });
}

Presets theorem_presets(const PresetHints& hints, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("theorem_presets: delta in (0, 1)");
    if (hints.d_u < 1 || hints.d_y < 1)
        throw ParameterError("theorem_presets: d_u, d_y must be >= 1");
    Presets out;
    out.m = hints.m.value_or(10);
    if (out.m < 2 || out.m % 2 != 0) throw ParameterError("theorem_presets: m must be even, >= 2");
    if (hints.t_len) {
        out.t_len = *hints.t_len;
        out.p = out.q = (out.t_len - out.m) / 2;
        out.notes.push_back("p = q = floor((T - m) / 2) from given T = " +
                            std::to_string(out.t_len));
    } else {
        out.p = out.q = out.m;
        out.t_len = 3 * out.m + 2;
        out.notes.push_back("p = q = m; T = 3m + 2 = " + std::to_string(out.t_len));
    }
    const double bound = 8.0 * hints.d_u * out.t_len +
                         4.0 * (hints.d_u + hints.d_y + 4) * std::log(3.0 * out.t_len / delta);
    out.m_rollouts = std::max<int>(hints.m_rollouts_floor, static_cast<int>(std::ceil(bound)));
    out.notes.push_back("M >= ceil(8 d_u T + 4 (d_u + d_y + 4) log(3T/delta)) = " +
                        std::to_string(static_cast<int>(std::ceil(bound))));
    out.notes.push_back("delta treated as failure probability (guarantee holds with prob. "
                        "1 - delta)");
    return out;
}

}  // namespace ltsp::sysid
