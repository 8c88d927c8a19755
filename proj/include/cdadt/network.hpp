#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cdadt/numerics.hpp"

namespace cdadt {

// Undirected connected communication graph over agents 0..d-1. Edges are
// normalized: first < second, sorted ascending, no duplicates, no self loops.
struct Topology {
  int d = 0;
  std::vector<std::pair<int, int>> edges;
};

// Cycle over d >= 3 agents. Throws TopologyError for smaller d.
Topology ring(int d);

// rows x cols lattice with horizontal/vertical neighbor edges; node (r, c)
// has index r * cols + c. Requires rows, cols >= 1 and rows * cols >= 2.
Topology grid(int rows, int cols);

// G(d, p_edge) draw with a deterministic generator. Disconnected draws are
// retried with the seed incremented by one; after 1000 consecutive failures
// a TopologyError is thrown. Deterministic per (d, p_edge, seed). Requires
// d >= 2 and p_edge in (0, 1].
Topology erdos_renyi(int d, double p_edge, std::uint64_t seed);

bool is_connected(const Topology& t);
std::vector<int> degrees(const Topology& t);

// JSON round trip, schema {"d": int, "edges": [[i, j], ...]}.
std::string topology_to_json(const Topology& t);
Topology topology_from_json(const std::string& text);

// Symmetric doubly stochastic gossip matrix plus its contraction factor
// lambda = spec_norm(W - 11^T / d) < 1 for a connected graph.
struct MixingMatrix {
  Mat w;
  double lambda = 0.0;
};

// Metropolis rule: W(i,j) = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal
// takes the remaining mass, zero elsewhere. Throws TopologyError when the
// graph is disconnected (lambda would reach 1).
MixingMatrix metropolis_weights(const Topology& t);

}  // namespace cdadt
