#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdadt/engine.hpp"
#include "cdadt/network.hpp"
#include "cdadt/problem.hpp"

namespace cdadt {

inline constexpr const char* kCodeVersion = "cdadt 0.1.0";

// Self-contained description of one experiment. Every default visible on the
// command line is materialized here before anything runs, so re-executing a
// stored manifest reproduces log.csv bit for bit on the same build.
struct ProblemSpec {
  std::string kind = "synthetic";  // "synthetic" | "csv"
  int n = 12;
  int m = 8;
  int q = 200;
  double xi_a = 0.97;
  double xi_b = 0.96;
  std::uint64_t seed = 1;
  std::string data_a;  // csv kind: paths to the two views
  std::string data_b;
  int p = 3;
  std::vector<int> partition;  // empty -> near-even split, resolved at build
  double regularizer = -1.0;   // < 0 -> trace-scaled default, resolved at build
};

struct TopologySpec {
  std::string kind = "er";  // "er" | "grid" | "ring"
  int d = 8;
  double p_edge = 0.5;      // er only
  std::uint64_t seed = 1;   // er only
  int grid_rows = 0;        // grid only, resolved from d at build
  int grid_cols = 0;
};

struct RunSpec {
  double eta = 1e-3;
  double beta = 1.0;
  long max_iters = 10000;
  double tol_stationarity = 1e-6;
  double tol_consensus = 1e-6;
  double tol_feasibility = 1e-6;
  double rho = 1e-2;
  bool record_merit = false;
  std::optional<std::uint64_t> init_seed;  // empty -> problem seed + 9001
};

struct DerivedSpec {
  double lambda = 0.0;
  int n_total = 0;
  int p = 0;
};

struct ExperimentManifest {
  std::string code_version = kCodeVersion;
  ProblemSpec problem;
  TopologySpec topology;
  RunSpec run;
  DerivedSpec derived;
};

std::string manifest_to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const std::string& text);
void write_manifest(const ExperimentManifest& m,
                    const std::filesystem::path& path);
ExperimentManifest read_manifest(const std::filesystem::path& path);

// Everything needed to launch the solver, plus the manifest with every
// resolved value written back.
struct BuiltExperiment {
  Problem problem;
  MixingMatrix mixing;
  Mat x_init;
  RunConfig config;
  ExperimentManifest manifest;
};

BuiltExperiment build_experiment(ExperimentManifest manifest);

// Factor a count into the most-square rows x cols lattice (rows <= cols).
std::pair<int, int> square_grid_dims(int d);

struct RunArtifacts {
  RunResult result;
  double elapsed_seconds = 0.0;
};

// Runs the built experiment and writes manifest.json, log.csv, summary.json
// and one agent_###_x.csv per agent into out_dir. On divergence the partial
// log and a summary marking the diverging iteration are still written before
// the error propagates.
RunArtifacts execute_run(const BuiltExperiment& built,
                         const std::filesystem::path& out_dir);

// Writes A.csv, B.csv and a manifest stub describing them.
void write_gen_data(const ProblemSpec& spec,
                    const std::filesystem::path& out_dir);

struct SweepOutcome {
  double beta = 0.0;
  bool converged = false;
  bool diverged = false;
  long iters = 0;
  long rounds = 0;
  double final_stat = 0.0;
  double final_cons = 0.0;
  double final_feas = 0.0;
  double objective = 0.0;
};

// One run per penalty weight, everything else shared; each lands in
// out_dir/beta_<value>/ and the outcomes are summarized in
// out_dir/sweep_summary.csv. A diverged run is recorded, not fatal.
std::vector<SweepOutcome> execute_sweep(const ExperimentManifest& base,
                                        const std::vector<double>& betas,
                                        const std::filesystem::path& out_dir);

struct ReportRow {
  std::string name;
  double lambda = 0.0;
  bool converged = false;
  long iters = 0;
  double final_stat = 0.0;
  double final_cons = 0.0;
  double final_feas = 0.0;
  double objective = 0.0;
  long to_stat = -1;  // first iterate at or below the threshold, -1 if never
  long to_cons = -1;
  long to_feas = -1;
  double elapsed_seconds = 0.0;
};

struct Report {
  std::vector<ReportRow> rows;        // sorted by lambda ascending
  std::vector<std::string> problems;  // per-directory parse failures
};

// Collects every run directory holding a log.csv under root (recursively).
// threshold feeds the iterations-to-threshold columns. Throws IoError when
// no readable run is found at all.
Report build_report(const std::filesystem::path& root, double threshold);
void write_report_csv(const Report& report,
                      const std::filesystem::path& path);

// Parsed log.csv (used by the report and by tests).
std::vector<IterationLog> read_log_csv(const std::filesystem::path& path);

}  // namespace cdadt
