#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cdadt/numerics.hpp"

namespace cdadt {

// Private payload of one agent: its objective summand, the matching ambient
// gradient, and its share of the constraint metric. The evaluators accept any
// column count (the CCA forms are column-agnostic).
struct LocalComponent {
  std::function<double(const Mat&)> value;     // f_i
  std::function<Mat(const Mat&)> gradient;     // ambient gradient of f_i
  Mat metric;                                  // M_i, exactly symmetric
};

// Minimization of sum_i f_i(X) over X in R^{n x p} subject to
// sum_i X^T M_i X = I_p. The summed metric is cached and validated to be
// positive definite when the problem is assembled.
struct Problem {
  int n = 0;  // ambient dimension
  int p = 0;  // number of columns
  int d = 0;  // number of agents
  std::vector<LocalComponent> components;
  Mat metric_total;  // sum of the agent metrics (positive definite)
};

// Sum of the agent objectives / gradients at one point, accumulated in agent
// index order so results are reproducible bit for bit.
double objective_value(const Problem& pb, const Mat& x);
Mat objective_gradient(const Problem& pb, const Mat& x);

// One view and its sample-column partition. a is n x q, b is m x q; agent i
// owns partition[i] consecutive columns of both.
struct CcaData {
  Mat a;
  Mat b;
  std::vector<int> partition;
};

// Random factor with prescribed singular value decay: U diag(xi^1..xi^n) V^T
// with U (n x n) and V (q x n) orthonormalized seeded Gaussians. Requires
// q >= n >= 1 and xi in (0, 1). Deterministic per (n, q, xi, seed).
Mat synth_factor(int n, int q, double xi, std::uint64_t seed);

// Near-even split of q columns over d agents: the first q mod d agents get
// ceil(q/d), the rest floor(q/d). Requires 1 <= d <= q.
std::vector<int> uniform_partition(int q, int d);

// Consecutive column blocks of m according to the partition (entries >= 1,
// summing to m.cols()). Concatenating the blocks reproduces m bit for bit.
std::vector<Mat> slice_columns(const Mat& m, const std::vector<int>& partition);

// Default ridge added to the summed metric: 1e-8 * tr(M_raw) / n where M_raw
// is the unregularized block-diagonal sum.
double default_cca_ridge(const CcaData& data);

// Assemble the distributed CCA problem: per agent, the cross-covariance
// block matrix drives f_i and its gradient, the block-diagonal part plus a
// ridge share forms M_i. Local data are discarded after assembly. Throws
// BuildError when the summed metric is not positive definite even with the
// ridge (the message advises raising it).
Problem build_cca(const CcaData& data, int p,
                  std::optional<double> regularizer = std::nullopt);

// Dense numeric CSV (no header). Distinct failures: CsvIoError (unreadable
// file), CsvEmptyError (no data rows), CsvRaggedError (inconsistent row
// widths), CsvParseError (unparseable or non-finite cell).
Mat load_matrix_csv(const std::string& path);

// Round-trip-exact writer for load_matrix_csv ("%.17g" cells).
void save_matrix_csv(const Mat& m, const std::string& path);

// Feasible starting point shared by all agents: a seeded Gaussian projected
// onto the constraint manifold.
Mat random_feasible_start(const Problem& pb, std::uint64_t seed);

}  // namespace cdadt
