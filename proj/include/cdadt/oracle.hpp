#pragma once

#include <functional>

#include "cdadt/numerics.hpp"
#include "cdadt/problem.hpp"

namespace cdadt {

// Eigenvalue gap below which the optimal subspace is reported as not
// uniquely determined (the optimal value is still valid).
inline constexpr double kEigGapWarn = 1e-10;

// Ground-truth solution of the assembled CCA problem.
struct CcaSolution {
  Mat x_star;              // n x p, feasible: x_star^T M x_star = I
  Vec top_eigvals;         // p leading eigenvalues of the whitened matrix
  double objective_star = 0.0;  // -(1/2) * sum of top_eigvals
  bool degenerate_gap = false;  // kept/dropped eigenvalues within kEigGapWarn
};

// Centralized reference solve: whiten the quadratic form with M^{-1/2},
// take the leading invariant subspace, and map it back. Requires a problem
// assembled by build_cca (the agent gradients must be linear, since the
// quadratic form is reconstructed through them; local data are not kept).
CcaSolution solve_cca_centralized(const Problem& pb);

// Central finite-difference gradient of a scalar function of a matrix,
// entry by entry. step must be > 0.
Mat fd_gradient(const std::function<double(const Mat&)>& f, const Mat& x,
                double step);

}  // namespace cdadt
