#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mcons/network.hpp"

using namespace mcons;

namespace {

Eigen::MatrixXi path3() {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(3, 3);
  adj(0, 1) = adj(1, 0) = 1;
  adj(1, 2) = adj(2, 1) = 1;
  return adj;
}

Eigen::MatrixXi k2() {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(2, 2);
  adj(0, 1) = adj(1, 0) = 1;
  return adj;
}

Eigen::MatrixXi ring(int n) {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    adj(i, j) = adj(j, i) = 1;
  }
  return adj;
}

}  // namespace

TEST_CASE("metropolis weights on K2 and the path graph") {
  const auto g2 = metropolis_weights(k2());
  CHECK(g2.weights(0, 0) == doctest::Approx(0.5));
  CHECK(g2.weights(0, 1) == doctest::Approx(0.5));
  CHECK(g2.weights(1, 1) == doctest::Approx(0.5));

  const auto g3 = metropolis_weights(path3());
  Matrix expected(3, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3,
      2.0 / 3;
  CHECK((g3.weights - expected).cwiseAbs().maxCoeff() <= 1e-15);

  Eigen::MatrixXi disconnected = Eigen::MatrixXi::Zero(3, 3);
  disconnected(0, 1) = disconnected(1, 0) = 1;
  CHECK_THROWS_WITH_AS((void)metropolis_weights(disconnected),
                       "graph not connected", PreconditionError);
}

TEST_CASE("double stochasticity and positive self-weights") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto adj = random_connected_graph(12, 0.3, seed);
    const auto g = metropolis_weights(adj);
    const Vector ones = Vector::Ones(g.num_nodes);
    CHECK((g.weights * ones - ones).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((g.weights.transpose() * ones - ones).cwiseAbs().maxCoeff() <=
          1e-12);
    CHECK(g.weights.diagonal().minCoeff() > 0.0);
    CHECK(g.spectral_gap_norm < 1.0);
    CHECK(g.spectral_gap_norm >= 0.0);
  }
}

TEST_CASE("spectral gap of K2 and path-3") {
  CHECK(metropolis_weights(k2()).spectral_gap_norm <= 1e-12);
  // eigenvalues of the path-3 matrix are {1, 2/3, 0}
  CHECK(metropolis_weights(path3()).spectral_gap_norm ==
        doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("matrix powers stay doubly stochastic and match brute force") {
  const auto g = metropolis_weights(path3());
  CHECK((matrix_power(g, 1) - g.weights).cwiseAbs().maxCoeff() == 0.0);

  const Matrix direct = g.weights * g.weights;
  CHECK((matrix_power(g, 2) - direct).cwiseAbs().maxCoeff() <= 1e-15);

  const auto gk2 = metropolis_weights(k2());
  const Matrix q5 = matrix_power(gk2, 5);
  CHECK((q5 - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() <= 1e-15);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rg = metropolis_weights(random_connected_graph(9, 0.3, seed));
    Matrix brute = Matrix::Identity(9, 9);
    for (int n = 1; n <= 12; ++n) {
      brute = brute * rg.weights;
      CHECK((matrix_power(rg, n) - brute).cwiseAbs().maxCoeff() <= 1e-12);
      const Vector ones = Vector::Ones(9);
      CHECK((matrix_power(rg, n) * ones - ones).cwiseAbs().maxCoeff() <=
            1e-10);
    }
  }
}

TEST_CASE("delta examples and the gamma^n envelope") {
  CHECK(delta(metropolis_weights(k2()), 1) <= 1e-15);

  const auto g3 = metropolis_weights(path3());
  CHECK(delta(g3, 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = metropolis_weights(random_connected_graph(8, 0.35, seed));
    double prev = 1.0;
    for (int n = 1; n <= 30; ++n) {
      const double d = delta(g, n);
      CHECK(d <= std::pow(g.spectral_gap_norm, n) + 1e-12);
      CHECK(d <= prev + 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("powers converge to the averaging matrix") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = metropolis_weights(random_connected_graph(10, 0.3, seed));
    const double gamma = g.spectral_gap_norm;
    if (gamma <= 0.0) continue;
    const int n = static_cast<int>(
        std::ceil(std::log(1e-8) / std::log(gamma)));
    CHECK(delta(g, n) <= 1e-8);
  }
}

TEST_CASE("graph diameter by BFS") {
  CHECK(metropolis_weights(k2()).diameter == 1);
  CHECK(metropolis_weights(path3()).diameter == 2);
  CHECK(metropolis_weights(ring(6)).diameter == 3);
}

TEST_CASE("random connected graph determinism and edge cases") {
  const auto a = random_connected_graph(2, 1.0, 9);
  CHECK(a == k2());

  const auto b1 = random_connected_graph(30, 0.15, 7);
  const auto b2 = random_connected_graph(30, 0.15, 7);
  CHECK(b1 == b2);
  CHECK(is_connected(b1));
  CHECK(b1.rows() == 30);
}

TEST_CASE("relabeling nodes permutes the weights consistently") {
  const auto adj = random_connected_graph(8, 0.4, 3);
  const auto g = metropolis_weights(adj);

  std::vector<int> perm = {3, 1, 4, 0, 6, 7, 2, 5};
  Eigen::MatrixXi padj(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) padj(perm[i], perm[j]) = adj(i, j);
  }
  const auto pg = metropolis_weights(padj);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      CHECK(pg.weights(perm[i], perm[j]) ==
            doctest::Approx(g.weights(i, j)).epsilon(1e-15));
    }
  }
}

TEST_CASE("edge list round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mcons_net_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "edges.txt").string();

  const auto adj = random_connected_graph(9, 0.4, 11);
  const auto g = metropolis_weights(adj);
  save_edge_list(g, path);
  const auto loaded = load_edge_list(path);
  CHECK(loaded == adj);
}
