#pragma once

#include <utility>
#include <vector>

#include "mcons/types.hpp"

namespace mcons {

/// Undirected connected communication graph together with its doubly
/// stochastic Metropolis weight matrix and spectral quantities.
struct NetworkGraph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, each edge once
  Matrix weights;                          // N x N, symmetric, doubly stochastic
  int diameter = 0;                        // 0 only for the single-node graph
  double spectral_gap_norm = 0.0;          // gamma = ||Q - 11^T/N||_2 < 1
  bool lazy_mixed = false;                 // Q <- (Q + I)/2 was applied

  double weight(int i, int j) const { return weights(i, j); }
};

/// Builds the Metropolis weights q_ij = 1 / (1 + max(deg_i, deg_j)) for a
/// symmetric 0/1 adjacency with zero diagonal. Throws on disconnected input.
NetworkGraph metropolis_weights(const Eigen::MatrixXi& adjacency);

/// Spectral norm of Q - 11^T/N (computed from scratch; the graph caches it).
double spectral_gap(const NetworkGraph& g);

/// Q^n by repeated squaring, n >= 1.
Matrix matrix_power(const NetworkGraph& g, int n);

/// delta(n) = max_{p,q} |(Q^n)_pq - 1/N|; bounded by gamma^n.
double delta(const NetworkGraph& g, int n);

/// Longest BFS shortest path over all node pairs.
int graph_diameter(const Eigen::MatrixXi& adjacency);

/// Erdos-Renyi adjacency resampled until connected (at most 1000 draws).
Eigen::MatrixXi random_connected_graph(int n, double edge_prob,
                                       std::uint64_t seed);

bool is_connected(const Eigen::MatrixXi& adjacency);

/// Edge-list text format: one "i j" pair per line, 0-indexed.
void save_edge_list(const NetworkGraph& g, const std::string& path);
Eigen::MatrixXi load_edge_list(const std::string& path);

}  // namespace mcons
