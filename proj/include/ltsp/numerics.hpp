#pragma once

#include "ltsp/types.hpp"

namespace ltsp::numerics {

struct SvdResult {
    Mat u;   // left singular vectors, orthonormal columns
    Vec s;   // nonincreasing, nonnegative
    Mat vt;  // right singular vectors, transposed
};

// Full SVD; singular values sorted nonincreasing.
SvdResult svd(const Mat& m);

// Best rank-r approximation (Eckart-Young truncation).
Mat svd_truncate(const Mat& m, int rank);

// Eigenvalues with multiplicity, sorted by nonincreasing modulus.
CVec eigenvalues(const Mat& m);

// Max eigenvalue modulus; 0 for an empty matrix.
double spectral_radius(const Mat& m);

// Block-diagonalizing split of a square matrix into its unstable (|lambda|>1)
// and stable (|lambda|<1) invariant subspaces:
//   a = [q1 q2] * blkdiag(n1, n2) * [r1; r2],   [r1; r2] = [q1 q2]^{-1}.
// q1 and q2 each have orthonormal columns spanning their invariant subspace.
struct SchurSplit {
    Mat q1;  // n x k
    Mat n1;  // k x k, all |eig| > 1
    Mat q2;  // n x (n-k)
    Mat n2;  // (n-k) x (n-k), all |eig| < 1
    Mat r1;  // k x n
    Mat r2;  // (n-k) x n
    int k = 0;
};

// Ordered real Schur form with |lambda| > 1 eigenvalues swapped to the leading
// block. Rejects eigenvalues with | |lambda| - 1 | <= marginal_tol.
SchurSplit schur_split_unstable(const Mat& a, double marginal_tol = 1e-8);

// Minimizes ||y - x * u||_F. Requires u full row rank
// (sigma_min > 1e-10 * sigma_max).
Mat lstsq_right(const Mat& y, const Mat& u);

// Minimizes ||a * x - b||_F. Requires a full column rank.
Mat lstsq_left(const Mat& a, const Mat& b);

// Stabilizing solution of P = a'Pa - a'Pb (b'Pb + r)^{-1} b'Pa + q via the
// structure-preserving doubling algorithm. Requires (a, b) stabilizable,
// q >= 0, r > 0.
Mat solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r);

}  // namespace ltsp::numerics
