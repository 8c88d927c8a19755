#include "cdadt/network.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <set>
#include <string>

#include "cdadt/errors.hpp"
#include "json.hpp"

namespace cdadt {

namespace {

// Sort, deduplicate, orient (i < j) and range-check an edge list.
std::vector<std::pair<int, int>> normalize_edges(
    int d, std::vector<std::pair<int, int>> edges) {
  for (auto& e : edges) {
    if (e.first == e.second) {
      throw TopologyError("topology: self loop at agent " +
                          std::to_string(e.first));
    }
    if (e.first < 0 || e.second < 0 || e.first >= d || e.second >= d) {
      throw TopologyError("topology: edge endpoint out of range for d = " +
                          std::to_string(d));
    }
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace

Topology ring(int d) {
  if (d < 3) {
    throw TopologyError("ring: need at least 3 agents, got " +
                        std::to_string(d));
  }
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i + 1 < d; ++i) edges.emplace_back(i, i + 1);
  edges.emplace_back(0, d - 1);
  return Topology{d, normalize_edges(d, std::move(edges))};
}

Topology grid(int rows, int cols) {
  if (rows < 1 || cols < 1 || rows * cols < 2) {
    throw TopologyError("grid: need rows, cols >= 1 and at least 2 nodes");
  }
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(id, id + 1);
      if (r + 1 < rows) edges.emplace_back(id, id + cols);
    }
  }
  return Topology{rows * cols, normalize_edges(rows * cols, std::move(edges))};
}

Topology erdos_renyi(int d, double p_edge, std::uint64_t seed) {
  if (d < 2) {
    throw TopologyError("erdos_renyi: need at least 2 agents, got " +
                        std::to_string(d));
  }
  if (!(p_edge > 0.0 && p_edge <= 1.0)) {
    throw TopologyError("erdos_renyi: edge probability must lie in (0, 1]");
  }
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    std::bernoulli_distribution coin(p_edge);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        if (coin(rng)) edges.emplace_back(i, j);
      }
    }
    Topology t{d, std::move(edges)};
    if (is_connected(t)) return t;
  }
  throw TopologyError("erdos_renyi: " + std::to_string(kMaxAttempts) +
                      " consecutive draws were disconnected; raise p_edge");
}

bool is_connected(const Topology& t) {
  if (t.d <= 0) return false;
  if (t.d == 1) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(t.d));
  for (const auto& e : t.edges) {
    adj[static_cast<std::size_t>(e.first)].push_back(e.second);
    adj[static_cast<std::size_t>(e.second)].push_back(e.first);
  }
  std::vector<bool> seen(static_cast<std::size_t>(t.d), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int visited = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++visited;
        frontier.push(v);
      }
    }
  }
  return visited == t.d;
}

std::vector<int> degrees(const Topology& t) {
  std::vector<int> deg(static_cast<std::size_t>(t.d), 0);
  for (const auto& e : t.edges) {
    ++deg[static_cast<std::size_t>(e.first)];
    ++deg[static_cast<std::size_t>(e.second)];
  }
  return deg;
}

std::string topology_to_json(const Topology& t) {
  nlohmann::ordered_json j;
  j["d"] = t.d;
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : t.edges) {
    edges.push_back(nlohmann::ordered_json::array({e.first, e.second}));
  }
  j["edges"] = edges;
  return j.dump(2);
}

Topology topology_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw TopologyError(std::string("topology JSON parse failed: ") +
                        e.what());
  }
  if (!j.contains("d") || !j.contains("edges")) {
    throw TopologyError("topology JSON must contain 'd' and 'edges'");
  }
  Topology t;
  t.d = j.at("d").get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw TopologyError("topology JSON edge entries must be pairs");
    }
    edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  t.edges = normalize_edges(t.d, std::move(edges));
  return t;
}

MixingMatrix metropolis_weights(const Topology& t) {
  if (!is_connected(t)) {
    throw TopologyError("metropolis_weights: graph is disconnected");
  }
  const int d = t.d;
  const std::vector<int> deg = degrees(t);
  Mat w = Mat::Zero(d, d);
  for (const auto& e : t.edges) {
    const double wij =
        1.0 / (1.0 + std::max(deg[static_cast<std::size_t>(e.first)],
                              deg[static_cast<std::size_t>(e.second)]));
    w(e.first, e.second) = wij;
    w(e.second, e.first) = wij;
  }
  for (int i = 0; i < d; ++i) {
    w(i, i) = 1.0 - w.row(i).sum();
  }
  MixingMatrix out;
  out.lambda = spec_norm(w - Mat::Constant(d, d, 1.0 / d));
  out.w = std::move(w);
  return out;
}

}  // namespace cdadt
