#include "cdadt/problem.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "cdadt/errors.hpp"

namespace cdadt {

namespace {

Mat seeded_gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat g(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) g(i, j) = normal(rng);
  }
  return g;
}

void check_partition(const std::vector<int>& partition, Eigen::Index cols) {
  if (partition.empty()) {
    throw DimensionError("partition: must contain at least one block");
  }
  long long total = 0;
  for (int c : partition) {
    if (c < 1) {
      throw DimensionError("partition: every block needs at least one column");
    }
    total += c;
  }
  if (total != static_cast<long long>(cols)) {
    throw DimensionError("partition: blocks sum to " + std::to_string(total) +
                         " but the data has " + std::to_string(cols) +
                         " columns");
  }
}

}  // namespace

double objective_value(const Problem& pb, const Mat& x) {
  double total = 0.0;
  for (const auto& c : pb.components) total += c.value(x);
  return total;
}

Mat objective_gradient(const Problem& pb, const Mat& x) {
  Mat total = Mat::Zero(x.rows(), x.cols());
  for (const auto& c : pb.components) total += c.gradient(x);
  return total;
}

Mat synth_factor(int n, int q, double xi, std::uint64_t seed) {
  if (n < 1) {
    throw DimensionError("synth_factor: need at least one row");
  }
  if (q < n) {
    throw DimensionError("synth_factor: need q >= n, got n = " +
                         std::to_string(n) + ", q = " + std::to_string(q));
  }
  if (!(xi > 0.0 && xi < 1.0)) {
    throw std::invalid_argument("synth_factor: decay must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  const Mat gu = seeded_gaussian(n, n, rng);
  const Mat gv = seeded_gaussian(q, n, rng);
  const Mat qu = Eigen::HouseholderQR<Mat>(gu).householderQ();
  const Mat qv = Eigen::HouseholderQR<Mat>(gv).householderQ() *
                 Mat::Identity(q, n);  // thin orthonormal factor
  Vec s(n);
  double v = 1.0;
  for (int i = 0; i < n; ++i) {
    v *= xi;  // singular value i is xi^(i+1)
    s(i) = v;
  }
  return qu * s.asDiagonal() * qv.transpose();
}

std::vector<int> uniform_partition(int q, int d) {
  if (d < 1 || q < d) {
    throw DimensionError("uniform_partition: need 1 <= d <= q, got q = " +
                         std::to_string(q) + ", d = " + std::to_string(d));
  }
  const int base = q / d;
  const int extra = q % d;
  std::vector<int> out(static_cast<std::size_t>(d), base);
  for (int i = 0; i < extra; ++i) out[static_cast<std::size_t>(i)] += 1;
  return out;
}

std::vector<Mat> slice_columns(const Mat& m,
                               const std::vector<int>& partition) {
  check_partition(partition, m.cols());
  std::vector<Mat> blocks;
  blocks.reserve(partition.size());
  Eigen::Index offset = 0;
  for (int c : partition) {
    blocks.emplace_back(m.middleCols(offset, c));
    offset += c;
  }
  return blocks;
}

double default_cca_ridge(const CcaData& data) {
  const double raw_trace = data.a.squaredNorm() + data.b.squaredNorm();
  const double n_total =
      static_cast<double>(data.a.rows() + data.b.rows());
  return 1e-8 * raw_trace / n_total;
}

Problem build_cca(const CcaData& data, int p,
                  std::optional<double> regularizer) {
  if (data.a.cols() != data.b.cols()) {
    throw DimensionError("build_cca: the two views must share the sample "
                         "count, got " +
                         std::to_string(data.a.cols()) + " vs " +
                         std::to_string(data.b.cols()));
  }
  if (data.a.rows() < 1 || data.b.rows() < 1) {
    throw DimensionError("build_cca: both views need at least one row");
  }
  check_partition(data.partition, data.a.cols());
  const int na = static_cast<int>(data.a.rows());
  const int mb = static_cast<int>(data.b.rows());
  const int n = na + mb;
  if (p < 1 || p > n) {
    throw DimensionError("build_cca: need 1 <= p <= " + std::to_string(n) +
                         ", got p = " + std::to_string(p));
  }
  const double ridge =
      regularizer.has_value() ? *regularizer : default_cca_ridge(data);
  if (!(ridge >= 0.0)) {
    throw std::invalid_argument("build_cca: regularizer must be >= 0");
  }
  const int d = static_cast<int>(data.partition.size());
  const std::vector<Mat> a_blocks = slice_columns(data.a, data.partition);
  const std::vector<Mat> b_blocks = slice_columns(data.b, data.partition);

  Problem pb;
  pb.n = n;
  pb.p = p;
  pb.d = d;
  pb.components.reserve(static_cast<std::size_t>(d));
  pb.metric_total = Mat::Zero(n, n);
  for (int i = 0; i < d; ++i) {
    const Mat& ai = a_blocks[static_cast<std::size_t>(i)];
    const Mat& bi = b_blocks[static_cast<std::size_t>(i)];
    const Mat aat = sym(ai * ai.transpose());
    const Mat bbt = sym(bi * bi.transpose());
    const Mat abt = ai * bi.transpose();

    Mat sig = Mat::Zero(n, n);
    sig.topLeftCorner(na, na) = aat;
    sig.topRightCorner(na, mb) = abt;
    sig.bottomLeftCorner(mb, na) = abt.transpose();
    sig.bottomRightCorner(mb, mb) = bbt;

    LocalComponent comp;
    comp.metric = Mat::Zero(n, n);
    comp.metric.topLeftCorner(na, na) = aat;
    comp.metric.bottomRightCorner(mb, mb) = bbt;
    comp.metric.diagonal().array() += ridge / static_cast<double>(d);

    auto sig_ptr = std::make_shared<const Mat>(std::move(sig));
    comp.value = [sig_ptr](const Mat& x) {
      return -0.5 * (x.array() * ((*sig_ptr) * x).array()).sum();
    };
    comp.gradient = [sig_ptr](const Mat& x) { return Mat(-((*sig_ptr) * x)); };

    pb.metric_total += comp.metric;
    pb.components.push_back(std::move(comp));
  }
  pb.metric_total = sym(pb.metric_total);

  const SymEig eig = sym_eig(pb.metric_total);
  const double lam_max = std::max(std::abs(eig.values(0)),
                                  std::abs(eig.values(eig.values.size() - 1)));
  if (eig.values(eig.values.size() - 1) <= tol::kSpdRel * lam_max) {
    throw BuildError(
        "build_cca: the summed metric is not positive definite; increase "
        "the ridge regularizer");
  }
  return pb;
}

Mat load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CsvIoError("csv: cannot open '" + path + "'");
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string cell = line.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start);
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      // accept surrounding whitespace only
      while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
      if (end == begin || (end && *end != '\0')) {
        throw CsvParseError("csv: row " + std::to_string(line_no) +
                            ": cannot parse cell '" + cell + "'");
      }
      if (!std::isfinite(v)) {
        throw CsvParseError("csv: row " + std::to_string(line_no) +
                            ": non-finite value '" + cell + "'");
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw CsvRaggedError("csv: row " + std::to_string(line_no) + " has " +
                           std::to_string(row.size()) + " cells, expected " +
                           std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw CsvEmptyError("csv: '" + path + "' contains no data rows");
  }
  Mat out(static_cast<Eigen::Index>(rows.size()),
          static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return out;
}

void save_matrix_csv(const Mat& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw CsvIoError("csv: cannot write '" + path + "'");
  }
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
  if (!out) {
    throw CsvIoError("csv: write to '" + path + "' failed");
  }
}

Mat random_feasible_start(const Problem& pb, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Mat g = seeded_gaussian(pb.n, pb.p, rng);
  return project_gstiefel(g, pb.metric_total);
}

}  // namespace cdadt
