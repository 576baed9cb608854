#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ltsp/errors.hpp"
#include "ltsp/numerics.hpp"
#include "ltsp/rng.hpp"

using namespace ltsp;
using namespace ltsp::numerics;

namespace {

Mat mat2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

// Random matrix with a planted spectrum through a well-conditioned basis.
Mat planted(const Vec& lambdas, std::uint64_t seed) {
    const int n = static_cast<int>(lambdas.size());
    Rng rng(seed);
    Mat q;
    do {
        q = rng.normal_mat(n, n);
    } while (svd(q).s(n - 1) < 1e-3);
    return q * lambdas.asDiagonal() * q.partialPivLu().solve(Mat::Identity(n, n));
}

}  // namespace

TEST_CASE("svd identity and diagonal") {
    const auto id = svd(Mat::Identity(2, 2));
    CHECK(id.s(0) == doctest::Approx(1.0));
    CHECK(id.s(1) == doctest::Approx(1.0));

    Mat d30 = mat2(3, 0, 0, 0);
    const auto r = svd(d30);
    CHECK(r.s(0) == doctest::Approx(3.0));
    CHECK(r.s(1) == doctest::Approx(0.0));
    // U, V are identity up to sign.
    CHECK(std::abs(r.u(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(r.vt(0, 0)) == doctest::Approx(1.0));
}

TEST_CASE("svd nilpotent block: values are sqrt eigs of M'M") {
    // M = [[0,2],[0,0]]: M'M = diag(0,4), so singular values are [2, 0].
    const auto r = svd(mat2(0, 2, 0, 0));
    CHECK(r.s(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.s(1) == doctest::Approx(0.0));
}

TEST_CASE("svd reconstruction and ordering on random matrices") {
    Rng rng(42);
    for (int trial = 0; trial < 12; ++trial) {
        const int rows = 1 + static_cast<int>(rng.uniform01() * 200);
        const int cols = 1 + static_cast<int>(rng.uniform01() * 200);
        const Mat m = rng.normal_mat(rows, cols);
        const auto r = svd(m);
        CHECK((r.u * r.s.asDiagonal() * r.vt - m).norm() <= 1e-10 * m.norm());
        for (int i = 1; i < r.s.size(); ++i) CHECK(r.s(i) <= r.s(i - 1));
        CHECK((r.u.transpose() * r.u - Mat::Identity(rows, rows)).norm() < 1e-10 * rows);
    }
}

TEST_CASE("Eckart-Young: truncation error equals next singular value") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int rows = 2 + static_cast<int>(rng.uniform01() * 30);
        const int cols = 2 + static_cast<int>(rng.uniform01() * 30);
        const Mat m = rng.normal_mat(rows, cols);
        const auto r = svd(m);
        const int rank = 1 + static_cast<int>(rng.uniform01() * (std::min(rows, cols) - 1));
        const Mat trunc = svd_truncate(m, rank);
        const double resid = svd(m - trunc).s(0);  // spectral norm
        CHECK(resid == doctest::Approx(r.s(rank)).epsilon(1e-10));
    }
}

TEST_CASE("eigenvalues: diagonal, rotation, companion") {
    const CVec d = eigenvalues(mat2(2, 0, 0, 0.5));
    CHECK(d(0).real() == doctest::Approx(2.0));
    CHECK(d(1).real() == doctest::Approx(0.5));

    const CVec rot = eigenvalues(mat2(0, -1, 1, 0));
    CHECK(std::abs(rot(0) - Complex(0, 1)) < 1e-12);
    CHECK(std::abs(rot(1) - Complex(0, -1)) < 1e-12);

    // Companion of z^2 - z - 1: roots are the golden ratio pair.
    Mat comp = mat2(0, 1, 1, 1);
    const CVec g = eigenvalues(comp);
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    CHECK(g(0).real() == doctest::Approx(phi).epsilon(1e-12));
    CHECK(g(1).real() == doctest::Approx(1.0 - phi).epsilon(1e-12));
}

TEST_CASE("eigenvalues rejects non-square") {
    CHECK_THROWS_AS(eigenvalues(Mat::Zero(2, 3)), DimensionError);
}

TEST_CASE("spectral_radius") {
    CHECK(spectral_radius(Mat::Zero(3, 3)) == doctest::Approx(0.0));
    CHECK(spectral_radius(mat2(0.9, 0, 0, -1.1)) == doctest::Approx(1.1));
    // Companion of z^2 - z + 0.25: double root at 0.5.
    CHECK(spectral_radius(mat2(0, 1, -0.25, 1)) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("schur_split_unstable on already split diagonals") {
    const auto s = schur_split_unstable(mat2(2, 0, 0, 0.5));
    CHECK(s.k == 1);
    CHECK(s.n1(0, 0) == doctest::Approx(2.0));
    CHECK(s.n2(0, 0) == doctest::Approx(0.5));
    CHECK(std::abs(s.q1(0, 0)) == doctest::Approx(1.0));

    Mat d3 = Mat::Zero(3, 3);
    d3.diagonal() << 0.3, 1.5, 0.2;
    const auto s3 = schur_split_unstable(d3);
    CHECK(s3.k == 1);
    CHECK(s3.n1(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("schur_split_unstable on planted 6x6 spectrum") {
    Vec lambdas(6);
    lambdas << 1.4, 1.2, 0.5, 0.4, 0.3, 0.2;
    const Mat a = planted(lambdas, 99);
    const auto s = schur_split_unstable(a);
    CHECK(s.k == 2);
    CVec e1 = eigenvalues(s.n1);
    CHECK(e1(0).real() == doctest::Approx(1.4).epsilon(1e-8));
    CHECK(e1(1).real() == doctest::Approx(1.2).epsilon(1e-8));

    // Similarity reconstruction and spectrum union.
    Mat q(6, 6), r(6, 6), mid = Mat::Zero(6, 6);
    q << s.q1, s.q2;
    r << s.r1, s.r2;
    mid.topLeftCorner(2, 2) = s.n1;
    mid.bottomRightCorner(4, 4) = s.n2;
    CHECK((a - q * mid * r).norm() <= 1e-8 * a.norm());
    CHECK((s.q1.transpose() * s.q1 - Mat::Identity(2, 2)).norm() < 1e-10);
    CHECK((s.q2.transpose() * s.q2 - Mat::Identity(4, 4)).norm() < 1e-10);
    CVec e2 = eigenvalues(s.n2);
    CHECK(e2(0).real() == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(e2(3).real() == doctest::Approx(0.2).epsilon(1e-8));
}

TEST_CASE("schur_split_unstable handles complex pairs and random spectra") {
    // Rotation scaled by 1.3 (complex pair outside) plus stable tail.
    Mat a = Mat::Zero(4, 4);
    a.topLeftCorner(2, 2) = 1.3 * mat2(0, -1, 1, 0);
    a(2, 2) = 0.6;
    a(3, 3) = -0.1;
    Rng rng(5);
    const Mat t = rng.normal_mat(4, 4);
    const Mat ti = t.partialPivLu().solve(Mat::Identity(4, 4));
    const Mat m = t * a * ti;
    const auto s = schur_split_unstable(m);
    CHECK(s.k == 2);
    CHECK(std::abs(eigenvalues(s.n1)(0)) == doctest::Approx(1.3).epsilon(1e-8));
    Mat q(4, 4), r(4, 4), mid = Mat::Zero(4, 4);
    q << s.q1, s.q2;
    r << s.r1, s.r2;
    mid.topLeftCorner(2, 2) = s.n1;
    mid.bottomRightCorner(2, 2) = s.n2;
    CHECK((m - q * mid * r).norm() <= 1e-8 * m.norm());
}

TEST_CASE("schur_split_unstable rejects marginal eigenvalues") {
    CHECK_THROWS_AS(schur_split_unstable(mat2(1.0, 0, 0, 0.5)), IllPosedSplitError);
    CHECK_THROWS_AS(schur_split_unstable(mat2(1.0 + 1e-10, 0, 0, 0.5)), IllPosedSplitError);
}

TEST_CASE("lstsq_right exact and scalar cases") {
    Rng rng(11);
    const Mat u = rng.normal_mat(4, 4);
    const Mat x = lstsq_right(u, u);
    CHECK((x - Mat::Identity(4, 4)).norm() < 1e-10);

    Mat y(1, 2), u2(1, 2);
    y << 2, 4;
    u2 << 1, 2;
    CHECK(lstsq_right(y, u2)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("lstsq_right overdetermined noisy fit matches normal equations") {
    Rng rng(13);
    const Mat u = rng.normal_mat(3, 40);
    const Mat e = rng.normal_mat(1, 40, 1e-6);
    Mat coef(1, 3);
    coef << 3, 3, 3;
    const Mat y = coef * u + e;
    const Mat x = lstsq_right(y, u);
    // Independent oracle: explicit normal equations.
    const Mat x_ne = (y * u.transpose()) * (u * u.transpose()).inverse();
    CHECK((x - x_ne).norm() < 1e-9);
    CHECK((x - coef).norm() < 1e-4);
    // Residual orthogonality.
    CHECK(((y - x * u) * u.transpose()).norm() <= 1e-8 * y.norm() * u.norm());
}

TEST_CASE("lstsq_right rejects rank-deficient regressors") {
    Mat u(2, 4);
    u << 1, 2, 3, 4, 2, 4, 6, 8;  // second row is 2x first
    CHECK_THROWS_AS(lstsq_right(Mat::Zero(1, 4), u), RankDeficiencyError);
    try {
        lstsq_right(Mat::Zero(1, 4), u);
    } catch (const RankDeficiencyError& e) {
        CHECK(e.sv_ratio <= 1e-10);
    }
}

TEST_CASE("solve_dare scalar cases") {
    Mat a(1, 1), b(1, 1), q(1, 1), r(1, 1);
    b << 1;
    r << 1;

    a << 0;
    q << 1;
    CHECK(solve_dare(a, b, q, r)(0, 0) == doctest::Approx(1.0).epsilon(1e-10));

    a << 2;
    q << 1;
    const double p = solve_dare(a, b, q, r)(0, 0);
    CHECK(p == doctest::Approx(2.0 + std::sqrt(5.0)).epsilon(1e-10));
    const double gain = 2.0 * p / (p + 1.0);
    CHECK(gain == doctest::Approx(1.6180339887).epsilon(1e-8));
    CHECK(2.0 - gain == doctest::Approx(0.3819660113).epsilon(1e-8));

    a << 0.5;
    q << 0;
    CHECK(solve_dare(a, b, q, r)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("solve_dare random stabilizable pairs: residual and closed loop") {
    Rng rng(21);
    int done = 0;
    while (done < 100) {
        const int n = 1 + static_cast<int>(rng.uniform01() * 7);
        const int m = 1 + static_cast<int>(rng.uniform01() * 2);
        const Mat a = rng.normal_mat(n, n);
        const Mat b = rng.normal_mat(n, m);
        const Mat q = Mat::Identity(n, n);
        const Mat r = Mat::Identity(m, m);
        Mat p;
        try {
            p = solve_dare(a, b, q, r);
        } catch (const SynthesisInfeasibleError&) {
            continue;  // rare non-stabilizable draw
        }
        ++done;
        const Mat gain = (b.transpose() * p * b + r).ldlt().solve(b.transpose() * p * a);
        const Mat resid = a.transpose() * p * a - a.transpose() * p * b * gain + q - p;
        CHECK(resid.norm() < 1e-8 * (1.0 + p.norm()));
        CHECK(spectral_radius(a - b * gain) < 1.0);
        CHECK(eigenvalues(p).real().minCoeff() > -1e-9);
    }
}

TEST_CASE("solve_dare rejects non-stabilizable pairs") {
    // Unstable mode with no input authority.
    Mat a = mat2(2, 0, 0, 0.5);
    Mat b(2, 1);
    b << 0, 1;
    CHECK_THROWS_AS(solve_dare(a, b, Mat::Identity(2, 2), Mat::Identity(1, 1)),
                    SynthesisInfeasibleError);
}
