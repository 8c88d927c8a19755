#include "cdadt/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "cdadt/errors.hpp"

namespace cdadt {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Spectral norm of an already-symmetric matrix: max |eigenvalue|.
double sym_spec_norm(const Vec& eigvals_descending) {
  if (eigvals_descending.size() == 0) return 0.0;
  return std::max(std::abs(eigvals_descending(0)),
                  std::abs(eigvals_descending(eigvals_descending.size() - 1)));
}

}  // namespace

Mat sym(const Mat& b) {
  if (b.rows() != b.cols()) {
    throw DimensionError("sym: input must be square, got " + shape_str(b));
  }
  Mat out(b.rows(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    out(j, j) = b(j, j);
    for (Eigen::Index i = 0; i < j; ++i) {
      const double v = 0.5 * (b(i, j) + b(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

double fro_norm(const Mat& b) { return b.norm(); }

double spec_norm(const Mat& b) {
  if (b.size() == 0) return 0.0;
  // Work on the smaller of the two Gram matrices; its top eigenvalue is the
  // squared largest singular value of B.
  Mat gram;
  if (b.rows() <= b.cols()) {
    gram = b * b.transpose();
  } else {
    gram = b.transpose() * b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(gram), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("spec_norm: eigensolver failed to converge");
  }
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

SymEig sym_eig(const Mat& s, double sym_check_rel) {
  if (s.rows() != s.cols()) {
    throw DimensionError("sym_eig: input must be square, got " + shape_str(s));
  }
  const double asym = (s - s.transpose()).norm();
  if (asym > sym_check_rel * s.norm()) {
    throw NotSymmetricError(
        "sym_eig: asymmetry " + std::to_string(asym) +
        " exceeds the allowed slack relative to ||S||_F = " +
        std::to_string(s.norm()));
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(s));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("sym_eig: eigensolver failed to converge");
  }
  SymEig out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

Mat spd_inv_sqrt(const Mat& s, double spd_rel) {
  const SymEig eig = sym_eig(s);
  const double cutoff = spd_rel * sym_spec_norm(eig.values);
  const double lam_min = eig.values(eig.values.size() - 1);
  if (lam_min <= cutoff) {
    throw NotSpdError("spd_inv_sqrt: input is not positive definite (min "
                      "eigenvalue " +
                      std::to_string(lam_min) + ", cutoff " +
                      std::to_string(cutoff) + ")");
  }
  const Vec inv_sqrt = eig.values.array().rsqrt();
  return sym(eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose());
}

Mat project_gstiefel(const Mat& x, const Mat& m, double spd_rel) {
  if (m.rows() != m.cols()) {
    throw DimensionError("project_gstiefel: metric must be square, got " +
                         shape_str(m));
  }
  if (x.rows() != m.rows()) {
    throw DimensionError("project_gstiefel: X is " + shape_str(x) +
                         " but the metric is " + shape_str(m));
  }
  const Mat gram = sym(x.transpose() * (m * x));
  const SymEig eig = sym_eig(gram);
  const double cutoff = spd_rel * sym_spec_norm(eig.values);
  if (eig.values(eig.values.size() - 1) <= cutoff) {
    throw RankDeficientError(
        "project_gstiefel: columns are rank deficient under the metric");
  }
  const Vec inv_sqrt = eig.values.array().rsqrt();
  return x * sym(eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose());
}

Mat riemannian_grad(const Mat& x, const Mat& g, const Mat& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("riemannian_grad: metric must be square, got " +
                         shape_str(m));
  }
  if (x.rows() != m.rows() || g.rows() != x.rows() || g.cols() != x.cols()) {
    throw DimensionError("riemannian_grad: X is " + shape_str(x) + ", G is " +
                         shape_str(g) + ", metric is " + shape_str(m));
  }
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("riemannian_grad: metric is not positive definite");
  }
  return llt.solve(g) - x * sym(x.transpose() * g);
}

}  // namespace cdadt
