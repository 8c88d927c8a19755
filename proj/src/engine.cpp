#include "cdadt/engine.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "cdadt/errors.hpp"

namespace cdadt {

namespace {

// Mean of equally shaped blocks, anchored at the first block: the deviations
// from blocks[0] are averaged and added back. Identical blocks give the
// anchor back exactly, so consensus residuals of identical states are zero.
Mat anchored_mean(const std::vector<Mat>& blocks) {
  Mat acc = Mat::Zero(blocks.front().rows(), blocks.front().cols());
  for (const auto& b : blocks) acc += b - blocks.front();
  return blocks.front() + acc / static_cast<double>(blocks.size());
}

// Weighted gather out[i] = sum_j w(i,j) * blocks[j], ascending j, skipping
// exact zeros. Fixed accumulation order keeps runs bitwise reproducible.
std::vector<Mat> weighted_gather(const Mat& w, const std::vector<Mat>& blocks) {
  const int d = static_cast<int>(blocks.size());
  std::vector<Mat> out(blocks.size());
  for (int i = 0; i < d; ++i) {
    Mat acc = Mat::Zero(blocks.front().rows(), blocks.front().cols());
    bool first = true;
    for (int j = 0; j < d; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      if (first) {
        acc = wij * blocks[static_cast<std::size_t>(j)];
        first = false;
      } else {
        acc += wij * blocks[static_cast<std::size_t>(j)];
      }
    }
    out[static_cast<std::size_t>(i)] = std::move(acc);
  }
  return out;
}

bool all_finite(const std::vector<AgentState>& states) {
  for (const auto& s : states) {
    if (!s.estimate.allFinite() || !s.grad_tracker.allFinite() ||
        !s.metric_tracker.allFinite()) {
      return false;
    }
  }
  return true;
}

void validate_config(const RunConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("run: eta must be > 0");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("run: beta must be > 0");
  if (cfg.max_iters < 0) {
    throw std::invalid_argument("run: max_iters must be >= 0");
  }
  if (!(cfg.tol_stationarity > 0.0) || !(cfg.tol_consensus > 0.0) ||
      !(cfg.tol_feasibility > 0.0)) {
    throw std::invalid_argument("run: tolerances must be > 0");
  }
  if (!(cfg.rho > 0.0)) throw std::invalid_argument("run: rho must be > 0");
}

}  // namespace

Mat cd_operator(const Mat& x, const Mat& gram) {
  if (gram.rows() != gram.cols() || gram.rows() != x.cols()) {
    throw DimensionError("cd_operator: gram must be p x p for an n x p input");
  }
  const Eigen::Index p = x.cols();
  return 0.5 * x * (3.0 * Mat::Identity(p, p) - gram);
}

double penalty_value(const Problem& pb, const Mat& x, double beta) {
  const Mat gram = sym(x.transpose() * (pb.metric_total * x));
  const Mat ax = cd_operator(x, gram);
  const double residual =
      (gram - Mat::Identity(x.cols(), x.cols())).norm();
  return objective_value(pb, ax) + 0.25 * beta * residual * residual;
}

Mat penalty_gradient(const Problem& pb, const Mat& x, double beta) {
  const Eigen::Index p = x.cols();
  const Mat eye = Mat::Identity(p, p);
  const Mat mx = pb.metric_total * x;
  const Mat gram = sym(x.transpose() * mx);
  const Mat ga = objective_gradient(pb, cd_operator(x, gram));
  return 0.5 * ga * (3.0 * eye - gram) - mx * sym(x.transpose() * ga) +
         beta * (mx * (gram - eye));
}

Mat direction_s(const Mat& x, const Mat& grad, const Mat& mx) {
  const Eigen::Index p = x.cols();
  const Mat eye = Mat::Identity(p, p);
  const Mat gram = x.transpose() * mx;
  return 0.5 * grad * (3.0 * eye - gram) - mx * sym(x.transpose() * grad);
}

Mat direction_q(const Mat& x, const Mat& mx) {
  const Eigen::Index p = x.cols();
  return mx * (x.transpose() * mx - Mat::Identity(p, p));
}

Mat centralized_direction(const Problem& pb, const Mat& x, double beta) {
  const Mat grad = objective_gradient(pb, x);
  const Mat mx = pb.metric_total * x;
  return direction_s(x, grad, mx) + beta * direction_q(x, mx);
}

Mat local_direction(const AgentState& s, int d, double beta) {
  const Eigen::Index p = s.estimate.cols();
  const Mat eye = Mat::Identity(p, p);
  const double dd = static_cast<double>(d);
  // The trackers estimate (1/d) of the full gradient and metric image; the
  // explicit d factors restore the full-scale direction.
  const Mat gram_scaled = dd * (s.estimate.transpose() * s.metric_tracker);
  return 0.5 * dd * s.grad_tracker * (3.0 * eye - gram_scaled) -
         dd * dd * s.metric_tracker *
             sym(s.estimate.transpose() * s.grad_tracker) +
         beta * dd * (s.metric_tracker * (gram_scaled - eye));
}

void mix_step(std::vector<AgentState>& states, const Mat& w, double eta) {
  const int d = static_cast<int>(states.size());
  if (w.rows() != d || w.cols() != d) {
    throw DimensionError("mix_step: weight matrix must be d x d");
  }
  std::vector<Mat> shifted(states.size());
  for (int j = 0; j < d; ++j) {
    const auto& s = states[static_cast<std::size_t>(j)];
    shifted[static_cast<std::size_t>(j)] = s.estimate - eta * s.direction;
  }
  std::vector<Mat> mixed = weighted_gather(w, shifted);
  for (int i = 0; i < d; ++i) {
    states[static_cast<std::size_t>(i)].estimate =
        std::move(mixed[static_cast<std::size_t>(i)]);
  }
}

void track_step(std::vector<AgentState>& states, const Mat& w,
                const std::vector<Mat>& fresh_grad,
                const std::vector<Mat>& fresh_metric,
                const std::vector<Mat>& prev_grad,
                const std::vector<Mat>& prev_metric) {
  const std::size_t d = states.size();
  if (w.rows() != static_cast<Eigen::Index>(d) ||
      w.cols() != static_cast<Eigen::Index>(d)) {
    throw DimensionError("track_step: weight matrix must be d x d");
  }
  if (fresh_grad.size() != d || fresh_metric.size() != d ||
      prev_grad.size() != d || prev_metric.size() != d) {
    throw DimensionError("track_step: evaluation lists must have one entry "
                         "per agent");
  }
  std::vector<Mat> grad_in(d), metric_in(d);
  for (std::size_t j = 0; j < d; ++j) {
    grad_in[j] = states[j].grad_tracker + (fresh_grad[j] - prev_grad[j]);
    metric_in[j] =
        states[j].metric_tracker + (fresh_metric[j] - prev_metric[j]);
  }
  std::vector<Mat> grad_out = weighted_gather(w, grad_in);
  std::vector<Mat> metric_out = weighted_gather(w, metric_in);
  for (std::size_t j = 0; j < d; ++j) {
    states[j].grad_tracker = std::move(grad_out[j]);
    states[j].metric_tracker = std::move(metric_out[j]);
  }
}

Metrics compute_metrics(const std::vector<AgentState>& states) {
  const std::size_t d = states.size();
  std::vector<Mat> estimates(d);
  for (std::size_t i = 0; i < d; ++i) estimates[i] = states[i].estimate;
  const Mat x_bar = anchored_mean(estimates);

  // d-scaled tracker sums: estimates of the full gradient and metric image
  // at the mean.
  Mat grad_hat = states.front().grad_tracker;
  Mat metric_hat = states.front().metric_tracker;
  for (std::size_t i = 1; i < d; ++i) {
    grad_hat += states[i].grad_tracker;
    metric_hat += states[i].metric_tracker;
  }

  const Eigen::Index p = x_bar.cols();
  Metrics m;
  m.stat_viol =
      (grad_hat - metric_hat * sym(x_bar.transpose() * grad_hat)).norm();
  double dev = 0.0;
  for (std::size_t i = 0; i < d; ++i) dev += (states[i].estimate - x_bar).norm();
  m.consensus_err = dev / static_cast<double>(d);
  m.feas_viol =
      (x_bar.transpose() * metric_hat - Mat::Identity(p, p)).norm();
  return m;
}

double merit_value(const Problem& pb, const std::vector<AgentState>& states,
                   double beta, double rho) {
  if (!(rho >= 0.0)) {
    throw std::invalid_argument("merit_value: rho must be >= 0");
  }
  const std::size_t d = states.size();
  std::vector<Mat> xs(d), us(d), vs(d);
  for (std::size_t i = 0; i < d; ++i) {
    xs[i] = states[i].estimate;
    us[i] = states[i].grad_tracker;
    vs[i] = states[i].metric_tracker;
  }
  const Mat x_bar = anchored_mean(xs);
  const Mat u_bar = anchored_mean(us);
  const Mat v_bar = anchored_mean(vs);
  double val = penalty_value(pb, x_bar, beta);
  for (std::size_t i = 0; i < d; ++i) {
    val += (xs[i] - x_bar).squaredNorm();
    val += rho * (us[i] - u_bar).squaredNorm();
    val += rho * (vs[i] - v_bar).squaredNorm();
  }
  return val;
}

RunResult run(const Problem& pb, const MixingMatrix& mixing, const Mat& x_init,
              const RunConfig& cfg,
              const std::function<void(const IterationLog&)>& on_log) {
  validate_config(cfg);
  const int d = pb.d;
  if (static_cast<int>(pb.components.size()) != d) {
    throw DimensionError("run: problem lists a different number of "
                         "components than agents");
  }
  if (mixing.w.rows() != d || mixing.w.cols() != d) {
    throw DimensionError("run: mixing matrix must be d x d");
  }
  if (x_init.rows() != pb.n || x_init.cols() != pb.p) {
    throw DimensionError("run: x_init must be n x p");
  }
  if (!x_init.allFinite()) {
    throw std::invalid_argument("run: x_init contains non-finite entries");
  }

  std::vector<AgentState> states(static_cast<std::size_t>(d));
  std::vector<Mat> grads(states.size()), metrics_img(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& comp = pb.components[i];
    grads[i] = comp.gradient(x_init);
    metrics_img[i] = comp.metric * x_init;
    states[i].estimate = x_init;
    states[i].grad_tracker = grads[i];
    states[i].metric_tracker = metrics_img[i];
    states[i].direction = Mat::Zero(pb.n, pb.p);
  }

  RunResult out;
  std::vector<Mat> fresh_grads(states.size()), fresh_metrics(states.size());
  long iter = 0;
  for (;;) {
    const Metrics m = compute_metrics(states);
    std::vector<Mat> estimates(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      estimates[i] = states[i].estimate;
    }
    const Mat x_bar = anchored_mean(estimates);
    IterationLog rec;
    rec.iter = iter;
    rec.stat_viol = m.stat_viol;
    rec.consensus_err = m.consensus_err;
    rec.feas_viol = m.feas_viol;
    rec.objective = objective_value(pb, x_bar);
    if (cfg.record_merit) {
      rec.merit = merit_value(pb, states, cfg.beta, cfg.rho);
    }
    if (on_log) on_log(rec);
    out.logs.push_back(std::move(rec));

    if (m.stat_viol <= cfg.tol_stationarity &&
        m.consensus_err <= cfg.tol_consensus &&
        m.feas_viol <= cfg.tol_feasibility) {
      out.converged = true;
      break;
    }
    if (iter >= cfg.max_iters) break;

    for (std::size_t i = 0; i < states.size(); ++i) {
      states[i].direction = local_direction(states[i], d, cfg.beta);
    }
    mix_step(states, mixing.w, cfg.eta);
    for (std::size_t i = 0; i < states.size(); ++i) {
      fresh_grads[i] = pb.components[i].gradient(states[i].estimate);
      fresh_metrics[i] = pb.components[i].metric * states[i].estimate;
    }
    track_step(states, mixing.w, fresh_grads, fresh_metrics, grads,
               metrics_img);
    grads.swap(fresh_grads);
    metrics_img.swap(fresh_metrics);
    ++iter;
    if (!all_finite(states)) {
      throw DivergenceError(iter, "run: non-finite agent state at iteration " +
                                      std::to_string(iter) +
                                      "; reduce the step size");
    }
  }
  out.final_states = std::move(states);
  out.rounds_of_communication = 3 * iter;
  return out;
}

std::vector<Mat> run_centralized(const Problem& pb, const Mat& x_init,
                                 double eta, double beta, long iters) {
  if (x_init.rows() != pb.n) {
    throw DimensionError("run_centralized: x_init must have n rows");
  }
  std::vector<Mat> trajectory;
  trajectory.reserve(static_cast<std::size_t>(iters) + 1);
  trajectory.push_back(x_init);
  Mat x = x_init;
  for (long k = 1; k <= iters; ++k) {
    x = x - eta * centralized_direction(pb, x, beta);
    if (!x.allFinite()) {
      throw DivergenceError(k, "run_centralized: non-finite iterate at "
                               "iteration " +
                                   std::to_string(k));
    }
    trajectory.push_back(x);
  }
  return trajectory;
}

}  // namespace cdadt
