#include "ltsp/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ltsp/errors.hpp"

namespace ltsp::numerics {

namespace {

void require_finite(const Mat& m, const char* what) {
    if (!m.allFinite()) throw ParameterError(std::string(what) + ": entries must be finite");
}

void require_square(const Mat& m, const char* what) {
    if (m.rows() != m.cols())
        throw DimensionError(std::string(what) + ": matrix must be square, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace

SvdResult svd(const Mat& m) {
    require_finite(m, "svd");
    Eigen::BDCSVD<Mat> dec(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (dec.info() != Eigen::Success) throw NumericError("svd: decomposition did not converge");
    SvdResult out;
    out.u = dec.matrixU();
    out.s = dec.singularValues();
    out.vt = dec.matrixV().transpose();
    return out;
}

Mat svd_truncate(const Mat& m, int rank) {
    if (rank < 0) throw ParameterError("svd_truncate: rank must be nonnegative");
    const int r = std::min<int>(rank, static_cast<int>(std::min(m.rows(), m.cols())));
    Eigen::BDCSVD<Mat> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success)
        throw NumericError("svd_truncate: decomposition did not converge");
    return dec.matrixU().leftCols(r) * dec.singularValues().head(r).asDiagonal() *
           dec.matrixV().leftCols(r).transpose();
}

CVec eigenvalues(const Mat& m) {
    require_square(m, "eigenvalues");
    if (m.rows() == 0) return CVec(0);
    require_finite(m, "eigenvalues");
    Eigen::EigenSolver<Mat> dec(m, /*computeEigenvectors=*/false);
    if (dec.info() != Eigen::Success)
        throw NumericError("eigenvalues: QR iteration did not converge");
    CVec ev = dec.eigenvalues();
    std::vector<Complex> v(ev.data(), ev.data() + ev.size());
    std::sort(v.begin(), v.end(), [](const Complex& a, const Complex& b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma > mb;
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return Eigen::Map<CVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double spectral_radius(const Mat& m) {
    if (m.rows() == 0) return 0.0;
    return eigenvalues(m).cwiseAbs().maxCoeff();
}

namespace {

// Eigenvalues of one diagonal block (size 1 or 2) of a real quasi-triangular
// matrix. A 2x2 block always carries a complex conjugate pair.
std::pair<Complex, Complex> block_eigs_2x2(double a, double b, double c, double d) {
    const double tr = a + d;
    const double det = a * d - b * c;
    const double disc = tr * tr / 4.0 - det;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return {Complex(tr / 2.0 + s, 0.0), Complex(tr / 2.0 - s, 0.0)};
    }
    const double im = std::sqrt(-disc);
    return {Complex(tr / 2.0, im), Complex(tr / 2.0, -im)};
}

struct SchurBlock {
    int start;
    int size;
    double modulus;  // max eigenvalue modulus of the block
};

std::vector<SchurBlock> scan_blocks(const Mat& t) {
    const int n = static_cast<int>(t.rows());
    std::vector<SchurBlock> blocks;
    int i = 0;
    while (i < n) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            auto [l1, l2] = block_eigs_2x2(t(i, i), t(i, i + 1), t(i + 1, i), t(i + 1, i + 1));
            blocks.push_back({i, 2, std::max(std::abs(l1), std::abs(l2))});
            i += 2;
        } else {
            blocks.push_back({i, 1, std::abs(t(i, i))});
            i += 1;
        }
    }
    return blocks;
}

// Swaps two adjacent diagonal blocks of the real Schur form (t, u) via an
// orthogonal transform built from the invariant subspace of the trailing
// block: solve t11 x - x t22 = t12, then QR of [x; -I].
void swap_adjacent_blocks(Mat& t, Mat& u, int i, int b1, int b2) {
    const int s = b1 + b2;
    const Mat t11 = t.block(i, i, b1, b1);
    const Mat t12 = t.block(i, i + b1, b1, b2);
    const Mat t22 = t.block(i + b1, i + b1, b2, b2);

    // Kronecker solve of the (at most 4x4) Sylvester system.
    Mat sys(b1 * b2, b1 * b2);
    Vec rhs(b1 * b2);
    for (int cj = 0; cj < b2; ++cj)
        for (int ri = 0; ri < b1; ++ri) {
            const int row = cj * b1 + ri;
            rhs(row) = t12(ri, cj);
            for (int cj2 = 0; cj2 < b2; ++cj2)
                for (int ri2 = 0; ri2 < b1; ++ri2) {
                    const int col = cj2 * b1 + ri2;
                    double val = 0.0;
                    if (cj == cj2) val += t11(ri, ri2);
                    if (ri == ri2) val -= t22(cj2, cj);
                    sys(row, col) = val;
                }
        }
    Eigen::FullPivLU<Mat> lu(sys);
    if (!lu.isInvertible())
        throw NumericError("schur reorder: block swap system is singular (eigenvalue clusters "
                           "too close)");
    const Vec xv = lu.solve(rhs);
    Mat x(b1, b2);
    for (int cj = 0; cj < b2; ++cj)
        for (int ri = 0; ri < b1; ++ri) x(ri, cj) = xv(cj * b1 + ri);

    Mat stack(s, b2);
    stack.topRows(b1) = x;
    stack.bottomRows(b2) = -Mat::Identity(b2, b2);
    const Mat q = Eigen::HouseholderQR<Mat>(stack).householderQ();

    // Apply the window rotation to t (both sides) and accumulate into u.
    t.middleRows(i, s) = q.transpose() * t.middleRows(i, s);
    t.middleCols(i, s) = t.middleCols(i, s) * q;
    u.middleCols(i, s) = u.middleCols(i, s) * q;

    // The trailing block's subdiagonal coupling is zero by construction; clear
    // the rounding residue so the quasi-triangular structure stays exact.
    t.block(i + b2, i, b1, b2).setZero();
}

// Stable bubble pass moving selected blocks to the leading position while
// preserving their relative order.
void reorder_schur(Mat& t, Mat& u, const std::vector<bool>& select_init) {
    std::vector<SchurBlock> blocks = scan_blocks(t);
    std::vector<bool> select = select_init;
    bool moved = true;
    while (moved) {
        moved = false;
        for (std::size_t j = 0; j + 1 < blocks.size(); ++j) {
            if (!select[j] && select[j + 1]) {
                swap_adjacent_blocks(t, u, blocks[j].start, blocks[j].size, blocks[j + 1].size);
                const int sz_lead = blocks[j + 1].size;
                const int sz_trail = blocks[j].size;
                blocks[j + 1].start = blocks[j].start + sz_lead;
                blocks[j].size = sz_lead;
                blocks[j + 1].size = sz_trail;
                std::swap(blocks[j].modulus, blocks[j + 1].modulus);
                std::swap(select[j], select[j + 1]);
                moved = true;
            }
        }
    }
}

}  // namespace

SchurSplit schur_split_unstable(const Mat& a, double marginal_tol) {
    require_square(a, "schur_split_unstable");
    require_finite(a, "schur_split_unstable");
    const int n = static_cast<int>(a.rows());
    SchurSplit out;
    if (n == 0) {
        out.q1 = out.n1 = out.q2 = out.n2 = out.r1 = out.r2 = Mat(0, 0);
        return out;
    }

    Eigen::RealSchur<Mat> schur(a);
    if (schur.info() != Eigen::Success)
        throw NumericError("schur_split_unstable: Schur iteration did not converge");
    const Mat t0 = schur.matrixT();
    const Mat u0 = schur.matrixU();

    const auto blocks = scan_blocks(t0);
    int k = 0;
    std::vector<bool> unstable(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        if (std::abs(blocks[j].modulus - 1.0) <= marginal_tol)
            throw IllPosedSplitError(
                "schur_split_unstable: eigenvalue modulus within tolerance of 1 (|lambda| = " +
                std::to_string(blocks[j].modulus) + ")");
        unstable[j] = blocks[j].modulus > 1.0;
        if (unstable[j]) k += blocks[j].size;
    }

    // Two independent reorderings of the same Schur form give orthonormal
    // bases for both invariant subspaces, so Q = [Q1 Q2] block-diagonalizes A
    // without a large Sylvester solve.
    Mat tu = t0, uu = u0;
    reorder_schur(tu, uu, unstable);
    std::vector<bool> stable(unstable.size());
    for (std::size_t j = 0; j < stable.size(); ++j) stable[j] = !unstable[j];
    Mat ts = t0, us = u0;
    reorder_schur(ts, us, stable);

    out.k = k;
    out.q1 = uu.leftCols(k);
    out.n1 = tu.topLeftCorner(k, k);
    out.q2 = us.leftCols(n - k);
    out.n2 = ts.topLeftCorner(n - k, n - k);

    Mat q(n, n);
    q.leftCols(k) = out.q1;
    q.rightCols(n - k) = out.q2;
    Eigen::FullPivLU<Mat> lu(q);
    if (!lu.isInvertible())
        throw NumericError("schur_split_unstable: invariant subspace bases are not complementary");
    const Mat r = lu.inverse();
    out.r1 = r.topRows(k);
    out.r2 = r.bottomRows(n - k);
    return out;
}

Mat lstsq_right(const Mat& y, const Mat& u) {
    if (y.cols() != u.cols())
        throw DimensionError("lstsq_right: y and u must have the same number of columns");
    require_finite(y, "lstsq_right");
    require_finite(u, "lstsq_right");
    if (u.rows() > u.cols())
        throw RankDeficiencyError("lstsq_right: u has more rows than columns, row rank deficient",
                                  0.0);
    Eigen::BDCSVD<Mat> dec(u, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) throw NumericError("lstsq_right: svd did not converge");
    const Vec& s = dec.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const double smin = s.size() ? s(s.size() - 1) : 0.0;
    const double ratio = smax > 0.0 ? smin / smax : 0.0;
    if (ratio <= 1e-10)
        throw RankDeficiencyError("lstsq_right: u is row rank deficient (sigma_min/sigma_max = " +
                                      std::to_string(ratio) + ")",
                                  ratio);
    return y * dec.matrixV() * s.cwiseInverse().asDiagonal() * dec.matrixU().transpose();
}

Mat lstsq_left(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows())
        throw DimensionError("lstsq_left: a and b must have the same number of rows");
    Mat xt = lstsq_right(b.transpose(), a.transpose());
    return xt.transpose();
}

Mat solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r) {
    require_square(a, "solve_dare(a)");
    require_square(q, "solve_dare(q)");
    require_square(r, "solve_dare(r)");
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(b.cols());
    if (b.rows() != n || q.rows() != n || r.rows() != m)
        throw DimensionError("solve_dare: inconsistent dimensions");
    if (n == 0) return Mat(0, 0);
    require_finite(a, "solve_dare");
    require_finite(b, "solve_dare");

    const Mat qs = 0.5 * (q + q.transpose());
    const Mat rs = 0.5 * (r + r.transpose());
    Eigen::LDLT<Mat> q_ldlt(qs);
    if (q_ldlt.info() != Eigen::Success ||
        (q_ldlt.vectorD().array() < -1e-10 * std::max(1.0, qs.norm())).any())
        throw ParameterError("solve_dare: q must be positive semidefinite");
    Eigen::LLT<Mat> r_llt(rs);
    if (r_llt.info() != Eigen::Success)
        throw ParameterError("solve_dare: r must be positive definite");

    // PBH test at every eigenvalue on or outside the unit circle.
    const CVec eigs = eigenvalues(a);
    const double scale = a.norm() + b.norm();
    for (int i = 0; i < eigs.size(); ++i) {
        if (std::abs(eigs(i)) < 1.0 - 1e-9) continue;
        CMat pencil(n, n + m);
        pencil.leftCols(n) = a.cast<Complex>() - eigs(i) * CMat::Identity(n, n);
        pencil.rightCols(m) = b.cast<Complex>();
        Eigen::JacobiSVD<CMat> sv(pencil);
        if (sv.singularValues()(n - 1) <= 1e-9 * scale)
            throw SynthesisInfeasibleError(
                "solve_dare: (a, b) is not stabilizable (PBH deficiency at |lambda| = " +
                std::to_string(std::abs(eigs(i))) + ")");
    }

    // Structure-preserving doubling: A_{j+1} = A_j W^{-1} A_j,
    // G_{j+1} = G_j + A_j W^{-1} G_j A_j', H_{j+1} = H_j + A_j' H_j W^{-1} A_j
    // with W = I + G_j H_j.
    Mat a_j = a;
    Mat g = b * r_llt.solve(b.transpose());
    Mat h = qs;
    constexpr int kMaxIter = 200;
    constexpr double kFixedPointTol = 1e-12;
    bool converged = false;
    for (int it = 0; it < kMaxIter; ++it) {
        const Mat w = Mat::Identity(n, n) + g * h;
        Eigen::PartialPivLU<Mat> w_lu(w);
        const Mat v1 = w_lu.solve(a_j);
        const Mat v2 = w_lu.solve(g.transpose()).transpose();
        g += a_j * v2 * a_j.transpose();
        const Mat h_next = h + v1.transpose() * h * a_j;
        a_j = a_j * v1;
        if (!h_next.allFinite() || !a_j.allFinite() || !g.allFinite())
            throw SynthesisInfeasibleError("solve_dare: doubling iteration diverged");
        const double delta = (h_next - h).norm();
        h = h_next;
        if (delta <= kFixedPointTol * std::max(1.0, h.norm())) {
            converged = true;
            break;
        }
    }
    Mat p = 0.5 * (h + h.transpose());

    const Mat btpb_r = b.transpose() * p * b + rs;
    Eigen::LLT<Mat> gain_llt(0.5 * (btpb_r + btpb_r.transpose()));
    if (gain_llt.info() != Eigen::Success)
        throw SynthesisInfeasibleError("solve_dare: b'Pb + r is not positive definite");
    const Mat k_gain = gain_llt.solve(b.transpose() * p * a);
    const Mat residual = a.transpose() * p * a - a.transpose() * p * b * k_gain + qs - p;
    if (!converged || residual.norm() >= 1e-8 * (1.0 + p.norm()))
        throw SynthesisInfeasibleError("solve_dare: residual did not reach tolerance (" +
                                       std::to_string(residual.norm()) + ")");
    if (spectral_radius(a - b * k_gain) >= 1.0)
        throw SynthesisInfeasibleError("solve_dare: closed loop of computed gain is not stable");
    return p;
}

}  // namespace ltsp::numerics
