#include "mcons/network.hpp"

#include <Eigen/Eigenvalues>
#include <deque>
#include <fstream>
#include <sstream>

#include "mcons/rng.hpp"

namespace mcons {

namespace {

std::vector<int> bfs_distances(const Eigen::MatrixXi& adj, int source) {
  const int n = static_cast<int>(adj.rows());
  std::vector<int> dist(n, -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v = 0; v < n; ++v) {
      if (adj(u, v) != 0 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

void check_adjacency(const Eigen::MatrixXi& adj) {
  if (adj.rows() != adj.cols() || adj.rows() < 1) {
    throw PreconditionError("adjacency must be square");
  }
  for (int i = 0; i < adj.rows(); ++i) {
    if (adj(i, i) != 0) throw PreconditionError("adjacency diagonal must be zero");
    for (int j = 0; j < adj.cols(); ++j) {
      if (adj(i, j) != adj(j, i)) {
        throw PreconditionError("adjacency must be symmetric");
      }
    }
  }
}

}  // namespace

bool is_connected(const Eigen::MatrixXi& adjacency) {
  const auto dist = bfs_distances(adjacency, 0);
  for (const int d : dist) {
    if (d < 0) return false;
  }
  return true;
}

int graph_diameter(const Eigen::MatrixXi& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  int diam = 0;
  for (int s = 0; s < n; ++s) {
    for (const int d : bfs_distances(adjacency, s)) {
      if (d < 0) throw PreconditionError("graph not connected");
      diam = std::max(diam, d);
    }
  }
  return diam;
}

NetworkGraph metropolis_weights(const Eigen::MatrixXi& adjacency) {
  check_adjacency(adjacency);
  if (!is_connected(adjacency)) throw PreconditionError("graph not connected");

  const int n = static_cast<int>(adjacency.rows());
  NetworkGraph g;
  g.num_nodes = n;

  Eigen::VectorXi deg = adjacency.rowwise().sum();
  g.weights = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (adjacency(i, j) != 0) {
        const double q = 1.0 / (1.0 + std::max(deg(i), deg(j)));
        g.weights(i, j) = q;
        g.weights(j, i) = q;
        g.edges.emplace_back(i, j);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    g.weights(i, i) = 1.0 - g.weights.row(i).sum();
  }

  // Metropolis weights already give q_ii > 0 on every graph, but aperiodicity
  // needs a positive self-weight, so guard against degenerate inputs anyway.
  if (n > 1 && g.weights.diagonal().minCoeff() <= 0.0) {
    g.weights = 0.5 * (g.weights + Matrix::Identity(n, n));
    g.lazy_mixed = true;
  }

  g.diameter = (n == 1) ? 0 : graph_diameter(adjacency);
  g.spectral_gap_norm = spectral_gap(g);
  return g;
}

double spectral_gap(const NetworkGraph& g) {
  const int n = g.num_nodes;
  const Matrix deflated =
      g.weights - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Matrix> es(deflated);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix matrix_power(const NetworkGraph& g, int n) {
  if (n < 1) throw PreconditionError("matrix power requires n >= 1");
  Matrix result = Matrix::Identity(g.num_nodes, g.num_nodes);
  Matrix base = g.weights;
  int e = n;
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return result;
}

double delta(const NetworkGraph& g, int n) {
  const Matrix qn = matrix_power(g, n);
  const double inv_n = 1.0 / static_cast<double>(g.num_nodes);
  return (qn.array() - inv_n).abs().maxCoeff();
}

Eigen::MatrixXi random_connected_graph(int n, double edge_prob,
                                       std::uint64_t seed) {
  if (n < 2) throw PreconditionError("random graph requires n >= 2");
  if (edge_prob <= 0.0 || edge_prob > 1.0) {
    throw PreconditionError("edge_prob must lie in (0, 1]");
  }
  RngStream stream(seed, 0x6772617068ULL);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (stream.uniform() < edge_prob) {
          adj(i, j) = 1;
          adj(j, i) = 1;
        }
      }
    }
    if (is_connected(adj)) return adj;
  }
  throw Error("failed to sample a connected graph in 1000 attempts; "
              "increase edge_prob");
}

void save_edge_list(const NetworkGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (const auto& [i, j] : g.edges) {
    out << i << " " << j << "\n";
  }
}

Eigen::MatrixXi load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::pair<int, int>> edges;
  int max_node = -1;
  int a = 0;
  int b = 0;
  while (in >> a >> b) {
    if (a < 0 || b < 0 || a == b) {
      throw Error("bad edge '" + std::to_string(a) + " " + std::to_string(b) +
                  "' in " + path);
    }
    edges.emplace_back(a, b);
    max_node = std::max({max_node, a, b});
  }
  if (edges.empty()) throw Error("no edges in " + path);
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(max_node + 1, max_node + 1);
  for (const auto& [i, j] : edges) {
    adj(i, j) = 1;
    adj(j, i) = 1;
  }
  return adj;
}

}  // namespace mcons
