#include "cdadt/oracle.hpp"

#include <stdexcept>

#include "cdadt/errors.hpp"

namespace cdadt {

CcaSolution solve_cca_centralized(const Problem& pb) {
  const int n = pb.n;
  const int p = pb.p;
  const Mat m_inv_half = spd_inv_sqrt(pb.metric_total);
  // The CCA gradients are linear (grad_i(Y) = -Sigma_i Y), so evaluating the
  // summed gradient at M^{-1/2} yields Sigma M^{-1/2} without retaining any
  // local data.
  const Mat sig_whitened = -objective_gradient(pb, m_inv_half);
  const Mat t = sym(m_inv_half * sig_whitened);
  const SymEig eig = sym_eig(t);

  CcaSolution sol;
  sol.top_eigvals = eig.values.head(p);
  sol.x_star = m_inv_half * eig.vectors.leftCols(p);
  sol.objective_star = -0.5 * sol.top_eigvals.sum();
  if (p < n && eig.values(p - 1) - eig.values(p) < kEigGapWarn) {
    sol.degenerate_gap = true;
  }
  return sol;
}

Mat fd_gradient(const std::function<double(const Mat&)>& f, const Mat& x,
                double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("fd_gradient: step must be > 0");
  }
  Mat grad(x.rows(), x.cols());
  Mat probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = x(i, j);
      probe(i, j) = orig + step;
      const double fp = f(probe);
      probe(i, j) = orig - step;
      const double fm = f(probe);
      probe(i, j) = orig;
      grad(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  return grad;
}

}  // namespace cdadt
