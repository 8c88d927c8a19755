#include "cdadt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "cdadt/errors.hpp"
#include "json.hpp"

namespace cdadt {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

constexpr const char* kLogHeader =
    "iter,stat_viol,consensus_err,feas_viol,objective,merit";

void write_log_csv(const fs::path& path,
                   const std::vector<IterationLog>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << kLogHeader << '\n';
  for (const auto& r : rows) {
    out << r.iter << ',' << g17(r.stat_viol) << ',' << g17(r.consensus_err)
        << ',' << g17(r.feas_viol) << ',' << g17(r.objective) << ',';
    if (r.merit.has_value()) out << g17(*r.merit);
    out << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_summary(const fs::path& path, bool converged, bool diverged,
                   long diverged_at, long iters, long rounds,
                   const IterationLog* last, double elapsed_seconds) {
  ordered_json j;
  j["converged"] = converged;
  j["diverged"] = diverged;
  if (diverged) j["diverged_at"] = diverged_at;
  j["iters"] = iters;
  j["rounds"] = rounds;
  if (last != nullptr) {
    j["final_metrics"] = {{"stat_viol", last->stat_viol},
                          {"consensus_err", last->consensus_err},
                          {"feas_viol", last->feas_viol}};
    j["objective"] = last->objective;
  }
  j["elapsed_seconds"] = elapsed_seconds;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

ordered_json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

template <typename T>
T require(const ordered_json& j, const char* key, const char* ctx) {
  if (!j.contains(key)) {
    throw IoError(std::string(ctx) + ": missing key '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string(ctx) + ": bad value for '" + key + "': " +
                  e.what());
  }
}

}  // namespace

std::string manifest_to_json(const ExperimentManifest& m) {
  ordered_json j;
  j["code_version"] = m.code_version;

  ordered_json pj;
  pj["kind"] = m.problem.kind;
  pj["n"] = m.problem.n;
  pj["m"] = m.problem.m;
  pj["q"] = m.problem.q;
  if (m.problem.kind == "synthetic") {
    pj["xi_a"] = m.problem.xi_a;
    pj["xi_b"] = m.problem.xi_b;
    pj["seed"] = m.problem.seed;
  } else {
    pj["data_a"] = m.problem.data_a;
    pj["data_b"] = m.problem.data_b;
    pj["seed"] = m.problem.seed;
  }
  pj["p"] = m.problem.p;
  pj["partition"] = m.problem.partition;
  pj["regularizer"] = m.problem.regularizer;
  j["problem"] = std::move(pj);

  ordered_json tj;
  tj["kind"] = m.topology.kind;
  tj["d"] = m.topology.d;
  if (m.topology.kind == "er") {
    tj["p_edge"] = m.topology.p_edge;
    tj["seed"] = m.topology.seed;
  } else if (m.topology.kind == "grid") {
    tj["grid_rows"] = m.topology.grid_rows;
    tj["grid_cols"] = m.topology.grid_cols;
  }
  j["topology"] = std::move(tj);

  ordered_json rj;
  rj["eta"] = m.run.eta;
  rj["beta"] = m.run.beta;
  rj["max_iters"] = m.run.max_iters;
  rj["tol_stationarity"] = m.run.tol_stationarity;
  rj["tol_consensus"] = m.run.tol_consensus;
  rj["tol_feasibility"] = m.run.tol_feasibility;
  rj["rho"] = m.run.rho;
  rj["record_merit"] = m.run.record_merit;
  if (m.run.init_seed.has_value()) rj["init_seed"] = *m.run.init_seed;
  j["run"] = std::move(rj);

  ordered_json dj;
  dj["lambda"] = m.derived.lambda;
  dj["n_total"] = m.derived.n_total;
  dj["p"] = m.derived.p;
  j["derived"] = std::move(dj);

  return j.dump(2);
}

ExperimentManifest manifest_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  ExperimentManifest m;
  m.code_version = j.value("code_version", std::string(kCodeVersion));

  if (!j.contains("problem")) throw IoError("manifest: missing 'problem'");
  const auto& pj = j.at("problem");
  m.problem.kind = require<std::string>(pj, "kind", "manifest problem");
  if (m.problem.kind != "synthetic" && m.problem.kind != "csv") {
    throw IoError("manifest: unknown problem kind '" + m.problem.kind + "'");
  }
  m.problem.n = pj.value("n", m.problem.n);
  m.problem.m = pj.value("m", m.problem.m);
  m.problem.q = pj.value("q", m.problem.q);
  m.problem.xi_a = pj.value("xi_a", m.problem.xi_a);
  m.problem.xi_b = pj.value("xi_b", m.problem.xi_b);
  m.problem.seed = pj.value("seed", m.problem.seed);
  m.problem.data_a = pj.value("data_a", std::string());
  m.problem.data_b = pj.value("data_b", std::string());
  m.problem.p = pj.value("p", m.problem.p);
  m.problem.partition =
      pj.value("partition", std::vector<int>());
  m.problem.regularizer = pj.value("regularizer", -1.0);

  if (!j.contains("topology")) throw IoError("manifest: missing 'topology'");
  const auto& tj = j.at("topology");
  m.topology.kind = require<std::string>(tj, "kind", "manifest topology");
  if (m.topology.kind != "er" && m.topology.kind != "grid" &&
      m.topology.kind != "ring") {
    throw IoError("manifest: unknown topology kind '" + m.topology.kind + "'");
  }
  m.topology.d = require<int>(tj, "d", "manifest topology");
  m.topology.p_edge = tj.value("p_edge", m.topology.p_edge);
  m.topology.seed = tj.value("seed", m.topology.seed);
  m.topology.grid_rows = tj.value("grid_rows", 0);
  m.topology.grid_cols = tj.value("grid_cols", 0);

  if (j.contains("run")) {
    const auto& rj = j.at("run");
    m.run.eta = rj.value("eta", m.run.eta);
    m.run.beta = rj.value("beta", m.run.beta);
    m.run.max_iters = rj.value("max_iters", m.run.max_iters);
    m.run.tol_stationarity =
        rj.value("tol_stationarity", m.run.tol_stationarity);
    m.run.tol_consensus = rj.value("tol_consensus", m.run.tol_consensus);
    m.run.tol_feasibility = rj.value("tol_feasibility", m.run.tol_feasibility);
    m.run.rho = rj.value("rho", m.run.rho);
    m.run.record_merit = rj.value("record_merit", m.run.record_merit);
    if (rj.contains("init_seed")) {
      m.run.init_seed = rj.at("init_seed").get<std::uint64_t>();
    }
  }
  if (j.contains("derived")) {
    const auto& dj = j.at("derived");
    m.derived.lambda = dj.value("lambda", 0.0);
    m.derived.n_total = dj.value("n_total", 0);
    m.derived.p = dj.value("p", 0);
  }
  return m;
}

void write_manifest(const ExperimentManifest& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << manifest_to_json(m) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

ExperimentManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

std::pair<int, int> square_grid_dims(int d) {
  if (d < 2) throw TopologyError("grid: need at least 2 agents");
  int rows = static_cast<int>(std::sqrt(static_cast<double>(d)));
  while (rows > 1 && d % rows != 0) --rows;
  return {rows, d / rows};
}

BuiltExperiment build_experiment(ExperimentManifest manifest) {
  CcaData data;
  if (manifest.problem.kind == "synthetic") {
    data.a = synth_factor(manifest.problem.n, manifest.problem.q,
                          manifest.problem.xi_a, manifest.problem.seed);
    // The second view draws from its own stream so the views stay
    // independent even when the shapes coincide.
    data.b = synth_factor(manifest.problem.m, manifest.problem.q,
                          manifest.problem.xi_b, manifest.problem.seed + 1);
  } else if (manifest.problem.kind == "csv") {
    if (manifest.problem.data_a.empty() || manifest.problem.data_b.empty()) {
      throw std::invalid_argument(
          "experiment: csv problems need both data paths");
    }
    data.a = load_matrix_csv(manifest.problem.data_a);
    data.b = load_matrix_csv(manifest.problem.data_b);
    if (data.a.cols() != data.b.cols()) {
      throw DimensionError("experiment: the two views must share the sample "
                           "count");
    }
    manifest.problem.n = static_cast<int>(data.a.rows());
    manifest.problem.m = static_cast<int>(data.b.rows());
    manifest.problem.q = static_cast<int>(data.a.cols());
  } else {
    throw std::invalid_argument("experiment: unknown problem kind '" +
                                manifest.problem.kind + "'");
  }

  const int d = manifest.topology.d;
  if (manifest.problem.partition.empty()) {
    manifest.problem.partition = uniform_partition(manifest.problem.q, d);
  }
  if (static_cast<int>(manifest.problem.partition.size()) != d) {
    throw DimensionError("experiment: partition size must equal the agent "
                         "count");
  }
  if (manifest.problem.regularizer < 0.0) {
    manifest.problem.regularizer = default_cca_ridge(data);
  }
  data.partition = manifest.problem.partition;

  BuiltExperiment built;
  built.problem =
      build_cca(data, manifest.problem.p, manifest.problem.regularizer);

  Topology topo;
  if (manifest.topology.kind == "er") {
    topo = erdos_renyi(d, manifest.topology.p_edge, manifest.topology.seed);
  } else if (manifest.topology.kind == "grid") {
    int rows = manifest.topology.grid_rows;
    int cols = manifest.topology.grid_cols;
    if (rows <= 0 || cols <= 0) {
      std::tie(rows, cols) = square_grid_dims(d);
    }
    if (rows * cols != d) {
      throw TopologyError("experiment: grid dims do not multiply to d");
    }
    manifest.topology.grid_rows = rows;
    manifest.topology.grid_cols = cols;
    topo = grid(rows, cols);
  } else {
    topo = ring(d);
  }
  built.mixing = metropolis_weights(topo);

  if (!manifest.run.init_seed.has_value()) {
    manifest.run.init_seed = manifest.problem.seed + 9001;
  }
  built.x_init = random_feasible_start(built.problem, *manifest.run.init_seed);

  built.config.eta = manifest.run.eta;
  built.config.beta = manifest.run.beta;
  built.config.max_iters = manifest.run.max_iters;
  built.config.tol_stationarity = manifest.run.tol_stationarity;
  built.config.tol_consensus = manifest.run.tol_consensus;
  built.config.tol_feasibility = manifest.run.tol_feasibility;
  built.config.rho = manifest.run.rho;
  built.config.record_merit = manifest.run.record_merit;

  manifest.derived.lambda = built.mixing.lambda;
  manifest.derived.n_total = built.problem.n;
  manifest.derived.p = built.problem.p;
  built.manifest = std::move(manifest);
  return built;
}

RunArtifacts execute_run(const BuiltExperiment& built,
                         const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_manifest(built.manifest, out_dir / "manifest.json");

  std::vector<IterationLog> rows;
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };
  RunArtifacts art;
  try {
    art.result =
        run(built.problem, built.mixing, built.x_init, built.config,
            [&rows](const IterationLog& r) { rows.push_back(r); });
  } catch (const DivergenceError& e) {
    // Preserve the trace up to the diverging iteration before propagating.
    write_log_csv(out_dir / "log.csv", rows);
    write_summary(out_dir / "summary.json", false, true, e.iteration,
                  rows.empty() ? 0 : rows.back().iter,
                  3 * (rows.empty() ? 0 : rows.back().iter),
                  rows.empty() ? nullptr : &rows.back(), elapsed());
    throw;
  }
  art.elapsed_seconds = elapsed();
  write_log_csv(out_dir / "log.csv", art.result.logs);
  const IterationLog& last = art.result.logs.back();
  write_summary(out_dir / "summary.json", art.result.converged, false, 0,
                last.iter, art.result.rounds_of_communication, &last,
                art.elapsed_seconds);
  for (std::size_t i = 0; i < art.result.final_states.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "agent_%03zu_x.csv", i);
    save_matrix_csv(art.result.final_states[i].estimate, (out_dir / name).string());
  }
  return art;
}

void write_gen_data(const ProblemSpec& spec, const fs::path& out_dir) {
  if (spec.kind != "synthetic") {
    throw std::invalid_argument("gen-data: only synthetic specs can be "
                                "materialized");
  }
  fs::create_directories(out_dir);
  const Mat a = synth_factor(spec.n, spec.q, spec.xi_a, spec.seed);
  const Mat b = synth_factor(spec.m, spec.q, spec.xi_b, spec.seed + 1);
  save_matrix_csv(a, (out_dir / "A.csv").string());
  save_matrix_csv(b, (out_dir / "B.csv").string());

  ordered_json j;
  j["code_version"] = kCodeVersion;
  ordered_json pj;
  pj["kind"] = "synthetic";
  pj["n"] = spec.n;
  pj["m"] = spec.m;
  pj["q"] = spec.q;
  pj["xi_a"] = spec.xi_a;
  pj["xi_b"] = spec.xi_b;
  pj["seed"] = spec.seed;
  pj["data_a"] = "A.csv";
  pj["data_b"] = "B.csv";
  j["problem"] = std::move(pj);
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw IoError("cannot write gen-data manifest");
  out << j.dump(2) << '\n';
}

std::vector<SweepOutcome> execute_sweep(const ExperimentManifest& base,
                                        const std::vector<double>& betas,
                                        const fs::path& out_dir) {
  if (betas.empty()) {
    throw std::invalid_argument("sweep: need at least one beta");
  }
  fs::create_directories(out_dir);
  std::vector<SweepOutcome> outcomes;
  for (double beta : betas) {
    ExperimentManifest m = base;
    m.run.beta = beta;
    const fs::path sub = out_dir / ("beta_" + g6(beta));
    SweepOutcome oc;
    oc.beta = beta;
    try {
      const RunArtifacts art = execute_run(build_experiment(std::move(m)), sub);
      const IterationLog& last = art.result.logs.back();
      oc.converged = art.result.converged;
      oc.iters = last.iter;
      oc.rounds = art.result.rounds_of_communication;
      oc.final_stat = last.stat_viol;
      oc.final_cons = last.consensus_err;
      oc.final_feas = last.feas_viol;
      oc.objective = last.objective;
    } catch (const DivergenceError& e) {
      oc.diverged = true;
      oc.iters = e.iteration;
      oc.rounds = 3 * e.iteration;
      oc.final_stat = oc.final_cons = oc.final_feas = oc.objective =
          std::numeric_limits<double>::quiet_NaN();
    }
    outcomes.push_back(oc);
  }

  std::ofstream out(out_dir / "sweep_summary.csv");
  if (!out) throw IoError("cannot write sweep_summary.csv");
  out << "beta,converged,diverged,iters,rounds,final_stat_viol,"
         "final_consensus_err,final_feas_viol,objective\n";
  for (const auto& oc : outcomes) {
    out << g17(oc.beta) << ',' << (oc.converged ? 1 : 0) << ','
        << (oc.diverged ? 1 : 0) << ',' << oc.iters << ',' << oc.rounds << ','
        << g17(oc.final_stat) << ',' << g17(oc.final_cons) << ','
        << g17(oc.final_feas) << ',' << g17(oc.objective) << '\n';
  }
  return outcomes;
}

std::vector<IterationLog> read_log_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("'" + path.string() + "': empty log");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader) {
    throw IoError("'" + path.string() + "': unexpected header '" + line + "'");
  }
  std::vector<IterationLog> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(
          start,
          comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 6) {
      throw IoError("'" + path.string() + "': line " +
                    std::to_string(line_no) + " has " +
                    std::to_string(cells.size()) + " fields, expected 6");
    }
    try {
      IterationLog r;
      r.iter = std::stol(cells[0]);
      r.stat_viol = std::stod(cells[1]);
      r.consensus_err = std::stod(cells[2]);
      r.feas_viol = std::stod(cells[3]);
      r.objective = std::stod(cells[4]);
      if (!cells[5].empty()) r.merit = std::stod(cells[5]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw IoError("'" + path.string() + "': line " +
                    std::to_string(line_no) + " is not numeric");
    }
  }
  if (rows.empty()) {
    throw IoError("'" + path.string() + "': no data rows");
  }
  return rows;
}

Report build_report(const fs::path& root, double threshold) {
  if (!fs::exists(root)) {
    throw IoError("report: '" + root.string() + "' does not exist");
  }
  std::vector<fs::path> log_paths;
  if (fs::is_regular_file(root / "log.csv")) {
    log_paths.push_back(root / "log.csv");
  }
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "log.csv" &&
        entry.path() != root / "log.csv") {
      log_paths.push_back(entry.path());
    }
  }
  std::sort(log_paths.begin(), log_paths.end());

  Report rep;
  for (const auto& log_path : log_paths) {
    const fs::path dir = log_path.parent_path();
    try {
      const std::vector<IterationLog> rows = read_log_csv(log_path);
      const ExperimentManifest manifest = read_manifest(dir / "manifest.json");
      const ordered_json summary = parse_json_file(dir / "summary.json");

      ReportRow row;
      row.name = fs::relative(dir, root).string();
      if (row.name.empty() || row.name == ".") row.name = dir.filename().string();
      row.lambda = manifest.derived.lambda;
      row.converged = summary.value("converged", false);
      row.elapsed_seconds = summary.value("elapsed_seconds", 0.0);
      const IterationLog& last = rows.back();
      row.iters = last.iter;
      row.final_stat = last.stat_viol;
      row.final_cons = last.consensus_err;
      row.final_feas = last.feas_viol;
      row.objective = last.objective;
      for (const auto& r : rows) {
        if (row.to_stat < 0 && r.stat_viol <= threshold) row.to_stat = r.iter;
        if (row.to_cons < 0 && r.consensus_err <= threshold) {
          row.to_cons = r.iter;
        }
        if (row.to_feas < 0 && r.feas_viol <= threshold) row.to_feas = r.iter;
      }
      rep.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      rep.problems.push_back(dir.string() + ": " + e.what());
    }
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const ReportRow& a, const ReportRow& b) {
                     if (a.lambda != b.lambda) return a.lambda < b.lambda;
                     return a.name < b.name;
                   });
  return rep;
}

void write_report_csv(const Report& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "name,lambda,converged,iters,final_stat_viol,final_consensus_err,"
         "final_feas_viol,objective,iters_to_stat,iters_to_consensus,"
         "iters_to_feas,elapsed_seconds\n";
  for (const auto& r : report.rows) {
    out << r.name << ',' << g17(r.lambda) << ',' << (r.converged ? 1 : 0)
        << ',' << r.iters << ',' << g17(r.final_stat) << ','
        << g17(r.final_cons) << ',' << g17(r.final_feas) << ','
        << g17(r.objective) << ',' << r.to_stat << ',' << r.to_cons << ','
        << r.to_feas << ',' << g17(r.elapsed_seconds) << '\n';
  }
}

}  // namespace cdadt
