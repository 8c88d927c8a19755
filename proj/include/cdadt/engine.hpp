#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cdadt/network.hpp"
#include "cdadt/numerics.hpp"
#include "cdadt/problem.hpp"

namespace cdadt {

// Per-agent working set. All blocks are n x p.
struct AgentState {
  Mat estimate;        // local copy of the decision variable
  Mat grad_tracker;    // running estimate of the average objective gradient
  Mat metric_tracker;  // running estimate of the average metric image M_i X_i
  Mat direction;       // most recent local search direction
};

struct RunConfig {
  double eta = 1e-3;              // step size, > 0
  double beta = 1.0;              // feasibility penalty weight, > 0
  long max_iters = 10000;         // >= 0
  double tol_stationarity = 1e-6;
  double tol_consensus = 1e-6;
  double tol_feasibility = 1e-6;
  double rho = 1e-2;              // merit weight on tracker deviations, > 0
  bool record_merit = false;      // merit is diagnostic only, never a stop rule
};

struct IterationLog {
  long iter = 0;
  double stat_viol = 0.0;
  double consensus_err = 0.0;
  double feas_viol = 0.0;
  double objective = 0.0;          // summed objective at the mean estimate
  std::optional<double> merit;     // present only when record_merit is set
};

struct RunResult {
  std::vector<IterationLog> logs;  // one record per iterate, including k = 0
  std::vector<AgentState> final_states;
  bool converged = false;
  long rounds_of_communication = 0;  // 3 gossip exchanges per iteration
};

// Violation scalars evaluated from the current states. The mean estimate is
// combined with the d-scaled tracker sums, which estimate the full gradient
// and metric image at the mean; at exact consensus the three scalars reduce
// to the centralized stationarity residual, zero, and the true feasibility
// residual.
struct Metrics {
  double stat_viol = 0.0;
  double consensus_err = 0.0;
  double feas_viol = 0.0;
};

// Smoothing map that absorbs the orthogonality constraint: X is pulled back
// toward the manifold through 0.5 * X * (3 I - gram) with gram = X^T M X.
// Feasible X (gram = I) is a fixed point.
Mat cd_operator(const Mat& x, const Mat& gram);

// Value of the dissolved objective: sum_i f_i(A(X)) plus the quartic
// feasibility penalty (beta/4) ||X^T M X - I||_F^2.
double penalty_value(const Problem& pb, const Mat& x, double beta);

// Exact ambient gradient of penalty_value (used for derivative checks).
Mat penalty_gradient(const Problem& pb, const Mat& x, double beta);

// First-order part of the search direction built from the ambient gradient
// and the metric image at the same point:
//   0.5 * G (3 I - X^T MX) - MX sym(X^T G).
// At feasible X this equals M times the Riemannian gradient.
Mat direction_s(const Mat& x, const Mat& grad, const Mat& mx);

// Feasibility restoring part MX (X^T MX - I); zero exactly on the manifold.
Mat direction_q(const Mat& x, const Mat& mx);

// Full direction S + beta * Q evaluated with the exact summed gradient and
// metric (the single-agent reference the decentralized update approximates).
Mat centralized_direction(const Problem& pb, const Mat& x, double beta);

// Local direction assembled from the agent's trackers; the trackers carry a
// 1/d scaling, compensated by the explicit d factors.
Mat local_direction(const AgentState& s, int d, double beta);

// One synchronous gossip exchange of the shifted estimates:
// X_i <- sum_j W(i,j) (X_j - eta * H_j), double buffered. Weighted gathers
// accumulate in ascending agent order (bitwise reproducible), skipping exact
// zeros of W.
void mix_step(std::vector<AgentState>& states, const Mat& w, double eta);

// Tracker refresh after the estimates moved: each tracker absorbs its local
// increment (fresh minus previous evaluation) and is gossiped once. The
// caller supplies both evaluations so each agent computes one gradient and
// one metric image per iteration.
void track_step(std::vector<AgentState>& states, const Mat& w,
                const std::vector<Mat>& fresh_grad,
                const std::vector<Mat>& fresh_metric,
                const std::vector<Mat>& prev_grad,
                const std::vector<Mat>& prev_metric);

Metrics compute_metrics(const std::vector<AgentState>& states);

// Diagnostic merit: penalty_value at the mean estimate plus the squared
// deviations of the estimates and (rho-weighted) trackers from their means.
// Accepts rho = 0 (pure estimate-deviation form).
double merit_value(const Problem& pb, const std::vector<AgentState>& states,
                   double beta, double rho);

// Full decentralized run from a shared start. Trackers initialize to the
// local gradient and metric image at x_init. Stops when all three metrics
// fall at or below their tolerances, or after max_iters iterations. Logs one
// record per iterate (so max_iters = 0 yields exactly the k = 0 record).
// Throws DivergenceError naming the iteration when any block turns
// non-finite. The optional sink receives each record as it is produced, so
// partial traces survive a divergence.
RunResult run(const Problem& pb, const MixingMatrix& mixing, const Mat& x_init,
              const RunConfig& cfg,
              const std::function<void(const IterationLog&)>& on_log = {});

// Single-agent reference iteration X <- X - eta * centralized_direction.
// Returns the iterates including the start (iters + 1 entries).
std::vector<Mat> run_centralized(const Problem& pb, const Mat& x_init,
                                 double eta, double beta, long iters);

}  // namespace cdadt
