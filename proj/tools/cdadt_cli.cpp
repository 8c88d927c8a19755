// Command-line front end: generate synthetic data, run the decentralized
// solver, sweep the penalty weight, summarize finished runs, or print the
// centralized reference solution.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure (divergence,
// infeasible construction), 3 I/O failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdadt/engine.hpp"
#include "cdadt/errors.hpp"
#include "cdadt/experiment.hpp"
#include "cdadt/oracle.hpp"

namespace fs = std::filesystem;
using namespace cdadt;

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const CLI::Validator kOpenUnit(
    [](std::string& s) {
      const double v = std::stod(s);
      return (v > 0.0 && v < 1.0) ? std::string()
                                  : std::string("must lie in (0, 1)");
    },
    "FLOAT in (0,1)");

const CLI::Validator kHalfOpenUnit(
    [](std::string& s) {
      const double v = std::stod(s);
      return (v > 0.0 && v <= 1.0) ? std::string()
                                   : std::string("must lie in (0, 1]");
    },
    "FLOAT in (0,1]");

const CLI::Validator kPositive(
    [](std::string& s) {
      const double v = std::stod(s);
      return (v > 0.0) ? std::string() : std::string("must be > 0");
    },
    "FLOAT > 0");

// Shared mutable option state for one subcommand.
struct Options {
  ExperimentManifest man;
  std::string out;
  std::string manifest_path;
  double tol = 1e-6;
  double ridge = -1.0;
  std::uint64_t init_seed = 0;
  std::vector<double> betas = {0.01, 0.1, 1.0, 10.0, 100.0};
  CLI::Option* tol_opt = nullptr;
  CLI::Option* ridge_opt = nullptr;
  CLI::Option* init_seed_opt = nullptr;
  CLI::Option* data_a_opt = nullptr;

  Options() {
    // Defaults follow the reference synthetic study.
    man.problem.n = 20;
    man.problem.m = 30;
    man.problem.q = 3200;
    man.problem.xi_a = 0.97;
    man.problem.xi_b = 0.96;
    man.problem.seed = 1;
    man.problem.p = 5;
    man.topology.kind = "er";
    man.topology.d = 32;
    man.topology.p_edge = 0.5;
    man.run.eta = 1e-4;
    man.run.beta = 1.0;
    man.run.max_iters = 10000;
    man.run.rho = 1e-2;
  }

  // Fold single-flag conveniences into the manifest after parsing.
  void finalize() {
    man.topology.seed = man.problem.seed;
    if (tol_opt && tol_opt->count() > 0) {
      man.run.tol_stationarity = tol;
      man.run.tol_consensus = tol;
      man.run.tol_feasibility = tol;
    }
    if (ridge_opt && ridge_opt->count() > 0) man.problem.regularizer = ridge;
    if (init_seed_opt && init_seed_opt->count() > 0) {
      man.run.init_seed = init_seed;
    }
    if (data_a_opt && data_a_opt->count() > 0) man.problem.kind = "csv";
  }
};

void add_problem_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--n", o.man.problem.n, "rows of the first view")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--m", o.man.problem.m, "rows of the second view")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--q", o.man.problem.q, "sample columns")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--xi-a", o.man.problem.xi_a,
                  "singular value decay of the first view")
      ->check(kOpenUnit)
      ->capture_default_str();
  cmd->add_option("--xi-b", o.man.problem.xi_b,
                  "singular value decay of the second view")
      ->check(kOpenUnit)
      ->capture_default_str();
  cmd->add_option("--seed", o.man.problem.seed,
                  "seed for data, topology and start point streams")
      ->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--p", o.man.problem.p, "columns of the decision variable")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--d", o.man.topology.d, "number of agents")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--topology", o.man.topology.kind,
                  "communication graph family")
      ->check(CLI::IsMember({"er", "grid", "ring"}))
      ->capture_default_str();
  cmd->add_option("--p-edge", o.man.topology.p_edge,
                  "edge probability for --topology er")
      ->check(kHalfOpenUnit)
      ->capture_default_str();
  cmd->add_option("--eta", o.man.run.eta, "step size")
      ->check(kPositive)
      ->capture_default_str();
  cmd->add_option("--beta", o.man.run.beta, "feasibility penalty weight")
      ->check(kPositive)
      ->capture_default_str();
  cmd->add_option("--max-iters", o.man.run.max_iters, "iteration budget")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  o.tol_opt = cmd->add_option("--tol", o.tol,
                              "tolerance applied to all three metrics")
                  ->check(kPositive)
                  ->capture_default_str();
  cmd->add_option("--rho", o.man.run.rho, "merit weight on tracker deviations")
      ->check(kPositive)
      ->capture_default_str();
  o.data_a_opt = cmd->add_option("--data-a", o.man.problem.data_a,
                                 "CSV for the first view (switches off "
                                 "synthetic generation)");
  cmd->add_option("--data-b", o.man.problem.data_b,
                  "CSV for the second view");
  o.ridge_opt = cmd->add_option("--ridge", o.ridge,
                                "metric regularizer (default: trace-scaled)");
  o.init_seed_opt = cmd->add_option("--init-seed", o.init_seed,
                                    "separate seed for the start point");
}

int run_command(const Options& o, bool merit) {
  ExperimentManifest man;
  if (!o.manifest_path.empty()) {
    man = read_manifest(o.manifest_path);
  } else {
    man = o.man;
  }
  if (merit) man.run.record_merit = true;
  const BuiltExperiment built = build_experiment(std::move(man));
  const RunArtifacts art = execute_run(built, o.out);
  const IterationLog& last = art.result.logs.back();
  std::cout << (art.result.converged ? "converged" : "stopped") << " after "
            << last.iter << " iterations ("
            << art.result.rounds_of_communication
            << " communication rounds, " << g17(art.elapsed_seconds)
            << " s)\n"
            << "  stat_viol     = " << g17(last.stat_viol) << "\n"
            << "  consensus_err = " << g17(last.consensus_err) << "\n"
            << "  feas_viol     = " << g17(last.feas_viol) << "\n"
            << "  objective     = " << g17(last.objective) << "\n"
            << "outputs in " << o.out << "\n";
  return 0;
}

int sweep_command(const Options& o) {
  const std::vector<SweepOutcome> outcomes =
      execute_sweep(o.man, o.betas, o.out);
  for (const auto& oc : outcomes) {
    std::cout << "beta=" << oc.beta << ": "
              << (oc.diverged ? "diverged"
                              : (oc.converged ? "converged" : "stopped"))
              << " at iter " << oc.iters << ", final stat_viol "
              << g17(oc.final_stat) << "\n";
  }
  std::cout << "summary in " << (fs::path(o.out) / "sweep_summary.csv").string()
            << "\n";
  return 0;
}

int report_command(const std::string& dir, double threshold) {
  const Report rep = build_report(dir, threshold);
  for (const auto& p : rep.problems) std::cerr << "skipped: " << p << "\n";
  if (rep.rows.empty()) {
    std::cerr << "report: no readable runs under '" << dir << "'\n";
    return 3;
  }
  write_report_csv(rep, fs::path(dir) / "report.csv");
  std::cout << "name,lambda,converged,iters,final_stat_viol,"
               "iters_to_stat,elapsed_seconds\n";
  for (const auto& r : rep.rows) {
    std::cout << r.name << ',' << r.lambda << ',' << (r.converged ? 1 : 0)
              << ',' << r.iters << ',' << g17(r.final_stat) << ','
              << r.to_stat << ',' << r.elapsed_seconds << "\n";
  }
  std::cout << "full table in " << (fs::path(dir) / "report.csv").string()
            << "\n";
  return 0;
}

int oracle_command(const Options& o) {
  CcaData data;
  if (o.man.problem.kind == "csv") {
    data.a = load_matrix_csv(o.man.problem.data_a);
    data.b = load_matrix_csv(o.man.problem.data_b);
  } else {
    data.a = synth_factor(o.man.problem.n, o.man.problem.q, o.man.problem.xi_a,
                          o.man.problem.seed);
    data.b = synth_factor(o.man.problem.m, o.man.problem.q, o.man.problem.xi_b,
                          o.man.problem.seed + 1);
  }
  data.partition = {static_cast<int>(data.a.cols())};
  const double ridge =
      o.man.problem.regularizer >= 0.0 ? o.man.problem.regularizer
                                       : default_cca_ridge(data);
  const Problem pb = build_cca(data, o.man.problem.p, ridge);
  const CcaSolution sol = solve_cca_centralized(pb);
  if (sol.degenerate_gap) {
    std::cerr << "warning: the optimal subspace is not uniquely determined "
                 "(eigenvalue gap below "
              << kEigGapWarn << "); the optimal value is still valid\n";
  }
  std::cout << "objective_star = " << g17(sol.objective_star) << "\n";
  std::cout << "top_eigenvalues =";
  for (Eigen::Index i = 0; i < sol.top_eigvals.size(); ++i) {
    std::cout << ' ' << g17(sol.top_eigvals(i));
  }
  std::cout << "\n";
  const double feas =
      (sol.x_star.transpose() * pb.metric_total * sol.x_star -
       Mat::Identity(pb.p, pb.p))
          .norm();
  std::cout << "solution_feasibility_residual = " << g17(feas) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized CCA via constraint-dissolving double tracking"};
  app.require_subcommand(1);

  Options gen_o, run_o, sweep_o, oracle_o;
  std::string report_dir;
  double report_tol = 1e-3;
  bool run_merit = false, sweep_merit = false;

  CLI::App* gen = app.add_subcommand(
      "gen-data", "write a synthetic factor pair as A.csv / B.csv");
  add_problem_flags(gen, gen_o);
  gen->add_option("--out", gen_o.out, "output directory")->required();

  CLI::App* runc = app.add_subcommand("run", "run the decentralized solver");
  add_problem_flags(runc, run_o);
  add_solver_flags(runc, run_o);
  runc->add_option("--out", run_o.out, "output directory")->required();
  runc->add_option("--manifest", run_o.manifest_path,
                   "re-run an existing manifest verbatim (other flags are "
                   "ignored)");
  runc->add_flag("--merit", run_merit, "record the merit column");

  CLI::App* sweep = app.add_subcommand(
      "sweep-beta", "run once per penalty weight, sharing everything else");
  add_problem_flags(sweep, sweep_o);
  add_solver_flags(sweep, sweep_o);
  sweep->add_option("--out", sweep_o.out, "output directory")->required();
  sweep->add_option("--betas", sweep_o.betas,
                    "comma-separated penalty weights")
      ->delimiter(',');
  sweep->add_flag("--merit", sweep_merit, "record the merit column");

  CLI::App* report = app.add_subcommand(
      "report", "summarize every run found under a directory");
  report->add_option("--out", report_dir, "directory holding run outputs")
      ->required();
  report->add_option("--tol", report_tol,
                     "threshold for the iterations-to columns")
      ->check(kPositive)
      ->capture_default_str();

  CLI::App* oracle = app.add_subcommand(
      "oracle", "print the centralized reference solution");
  add_problem_flags(oracle, oracle_o);
  oracle->add_option("--p", oracle_o.man.problem.p,
                     "columns of the decision variable")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle_o.data_a_opt =
      oracle->add_option("--data-a", oracle_o.man.problem.data_a,
                         "CSV for the first view");
  oracle->add_option("--data-b", oracle_o.man.problem.data_b,
                     "CSV for the second view");
  oracle_o.ridge_opt = oracle->add_option(
      "--ridge", oracle_o.ridge, "metric regularizer (default: trace-scaled)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      gen_o.finalize();
      write_gen_data(gen_o.man.problem, gen_o.out);
      std::cout << "wrote A.csv, B.csv and manifest.json to " << gen_o.out
                << "\n";
      return 0;
    }
    if (runc->parsed()) {
      run_o.finalize();
      return run_command(run_o, run_merit);
    }
    if (sweep->parsed()) {
      sweep_o.finalize();
      sweep_o.man.run.record_merit = sweep_merit;
      return sweep_command(sweep_o);
    }
    if (report->parsed()) {
      return report_command(report_dir, report_tol);
    }
    if (oracle->parsed()) {
      oracle_o.finalize();
      return oracle_command(oracle_o);
    }
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
