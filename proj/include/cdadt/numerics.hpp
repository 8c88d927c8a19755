#pragma once

#include <Eigen/Dense>

namespace cdadt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Default numeric thresholds for this module. Every routine that uses one
// also takes it as a defaulted parameter, so callers can tighten or relax
// them without recompiling.
namespace tol {
// Allowed relative asymmetry ||S - S^T||_F / ||S||_F on symmetric inputs.
inline constexpr double kSymCheckRel = 1e-12;
// Positive-definiteness cutoff, relative to the spectral norm of the input:
// the smallest eigenvalue must exceed kSpdRel * ||S||_2.
inline constexpr double kSpdRel = 1e-12;
}  // namespace tol

// Symmetric part (B + B^T)/2. Each mirrored pair is averaged once and the
// value written to both triangles, so the result is exactly symmetric.
// Throws DimensionError when B is not square.
Mat sym(const Mat& b);

// Frobenius norm. Zero-sized inputs give 0.
double fro_norm(const Mat& b);

// Spectral norm (largest singular value) via an eigendecomposition of the
// smaller Gram matrix of B. Zero-sized inputs give 0.
double spec_norm(const Mat& b);

// Eigendecomposition of a symmetric matrix: values descending, eigenvector
// columns orthonormal, S * vectors = vectors * diag(values).
struct SymEig {
  Vec values;   // descending
  Mat vectors;  // column i pairs with values(i)
};

// Throws DimensionError (non-square) or NotSymmetricError (asymmetry beyond
// sym_check_rel * ||S||_F). The input is symmetrized before factorization so
// roundoff-level asymmetry cannot leak into the result.
SymEig sym_eig(const Mat& s, double sym_check_rel = tol::kSymCheckRel);

// Inverse principal square root S^{-1/2} of a symmetric positive definite
// matrix: the symmetric positive branch V diag(values^{-1/2}) V^T. Throws
// NotSpdError when the smallest eigenvalue is <= spd_rel * ||S||_2.
Mat spd_inv_sqrt(const Mat& s, double spd_rel = tol::kSpdRel);

// Metric projection onto the generalized Stiefel manifold
// { Y : Y^T M Y = I }: returns X (X^T M X)^{-1/2}. Throws RankDeficientError
// when X^T M X is singular at the spd_rel cutoff, DimensionError on shape
// mismatch.
Mat project_gstiefel(const Mat& x, const Mat& m, double spd_rel = tol::kSpdRel);

// Riemannian gradient on the generalized Stiefel manifold for an ambient
// gradient G at a feasible X: M^{-1} G - X sym(X^T G). The result D satisfies
// the tangency identity D^T M X + X^T M D = 0. Throws NotSpdError when the
// Cholesky solve detects an indefinite metric, DimensionError on mismatch.
Mat riemannian_grad(const Mat& x, const Mat& g, const Mat& m);

}  // namespace cdadt
