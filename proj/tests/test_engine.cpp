#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "mcons/engine.hpp"
#include "mcons/oracle.hpp"

using namespace mcons;

namespace {

Matrix unit(int dim, int axis) {
  Matrix e = Matrix::Zero(dim, 1);
  e(axis, 0) = 1.0;
  return e;
}

Eigen::MatrixXi k2_adj() {
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(2, 2);
  adj(0, 1) = adj(1, 0) = 1;
  return adj;
}

Eigen::MatrixXi single_node() { return Eigen::MatrixXi::Zero(1, 1); }

Problem eigvec_problem(int dim, int nodes, std::uint64_t seed,
                       double edge_prob = 0.4) {
  const auto d = ManifoldDescriptor::sphere(dim);
  NetworkGraph g = nodes == 1
                       ? metropolis_weights(single_node())
                       : metropolis_weights(
                             random_connected_graph(nodes, edge_prob, seed));
  const Matrix data = synthetic_dataset(dim, std::max(nodes, 3 * dim), 0.5,
                                        seed + 1);
  auto costs = partition_dataset(data, nodes, seed + 2, CostKind::Eigvec);
  auto problem = Problem::make(d, std::move(g), std::move(costs));
  problem.oracle_point =
      leading_eigenvector(problem.global_cost.gram()).value.coords;
  return problem;
}

}  // namespace

TEST_CASE("consensus round schedule") {
  CHECK(n_k_schedule(0.0, 0, 0.1, 100) == 1);
  CHECK(n_k_schedule(0.0, 500, 0.1, 100) == 1);
  // (2/3)^6 ~ 0.088 <= 0.1 < (2/3)^5 ~ 0.132
  CHECK(n_k_schedule(2.0 / 3, 0, 0.1, 100) == 6);
  int prev = 0;
  for (int k = 0; k < 2000; ++k) {
    const int n = n_k_schedule(0.8, k, 0.1, 1000000);
    CHECK(n >= prev);
    CHECK(std::pow(0.8, n) <= 0.1 / (k + 1) + 1e-12);
    prev = n;
  }
  // cap applies
  CHECK(n_k_schedule(0.99, 100000, 0.01, 50) == 50);
}

TEST_CASE("gradient consensus via matrix powers") {
  const auto d = ManifoldDescriptor::sphere(3);

  // single node passes its gradient through
  {
    Configuration v{d, {unit(3, 0)}};
    const auto g = metropolis_weights(single_node());
    const auto xi = gradient_consensus_power(v, {unit(3, 1)}, g, 3);
    CHECK((xi[0] - unit(3, 1)).norm() == 0.0);
  }

  // coincident agents, many rounds: arithmetic mean of the gradients
  {
    const auto g = metropolis_weights(k2_adj());
    Configuration v{d, {unit(3, 0), unit(3, 0)}};
    const std::vector<Matrix> grads = {unit(3, 1), unit(3, 2)};
    const auto xi = gradient_consensus_power(v, grads, g, 200);
    const Matrix mean = 0.5 * (unit(3, 1) + unit(3, 2));
    CHECK((xi[0] - mean).norm() <= 1e-8);
    CHECK((xi[1] - mean).norm() <= 1e-8);
  }

  // quarter-circle pair: transported average with Q = [[.5,.5],[.5,.5]]
  {
    const auto g = metropolis_weights(k2_adj());
    Configuration v{d, {unit(3, 0), unit(3, 1)}};
    const std::vector<Matrix> grads = {unit(3, 1), unit(3, 2)};
    const auto xi = gradient_consensus_power(v, grads, g, 1);
    const Matrix want = 0.5 * unit(3, 1) + 0.5 * unit(3, 2);
    CHECK((xi[0] - want).norm() <= 1e-14);
  }
}

TEST_CASE("descent step") {
  const auto d = ManifoldDescriptor::sphere(3);
  Configuration v{d, {unit(3, 0)}};
  const std::vector<Matrix> xi = {unit(3, 1)};

  const auto frozen = descent_step(v, xi, 0.0);
  CHECK((frozen.points[0] - unit(3, 0)).norm() == 0.0);

  const std::vector<Matrix> zero = {Matrix::Zero(3, 1)};
  const auto same = descent_step(v, zero, 0.7);
  CHECK((same.points[0] - unit(3, 0)).norm() == 0.0);

  const auto moved = descent_step(v, xi, 1.0);
  CHECK((moved.points[0] - (unit(3, 0) - unit(3, 1)) / std::sqrt(2.0)).norm() <=
        1e-15);
}

TEST_CASE("tracking identity is exact on euclidean quadratics") {
  const auto d = ManifoldDescriptor::euclidean(3);
  RngStream stream(4, 0);
  for (const int nodes : {2, 6}) {
    Eigen::MatrixXi adj;
    if (nodes == 2) {
      adj = k2_adj();
    } else {
      adj = Eigen::MatrixXi::Zero(6, 6);
      for (int i = 0; i < 6; ++i) {
        adj(i, (i + 1) % 6) = adj((i + 1) % 6, i) = 1;
      }
    }
    NetworkGraph g = metropolis_weights(adj);
    std::vector<NodeCost> costs;
    for (int i = 0; i < nodes; ++i) {
      Matrix m(3, 3);
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m(r, c) = stream.normal();
      }
      Matrix s = m.transpose() * m / 3.0 + 0.2 * Matrix::Identity(3, 3);
      Vector offset(3);
      for (int r = 0; r < 3; ++r) offset(r) = stream.normal();
      costs.push_back(NodeCost::quadratic(s, offset));
    }
    auto problem = Problem::make(d, std::move(g), std::move(costs));

    RngStream init_stream(9, 1);
    Configuration init{d, {}};
    for (int i = 0; i < nodes; ++i) {
      Matrix p(3, 1);
      for (int r = 0; r < 3; ++r) p(r, 0) = init_stream.normal();
      init.points.push_back(p);
    }

    RunConfig cfg;
    cfg.mode = ConsensusMode::Tracking;
    cfg.epsilon = 0.3;
    cfg.max_iters = 300;
    cfg.track_deviation = true;
    cfg.master_seed = 5;

    const auto result = run(problem, cfg, init);
    CHECK(!result.aborted);
    CHECK(result.deviation.size() == 300);
    for (const double dev : result.deviation) {
      CHECK(dev <= 1e-10);
    }
    // one communication round per iteration
    CHECK(result.comm_rounds == 300);
  }
}

TEST_CASE("tracking with a single node telescopes to the plain gradient") {
  const auto d = ManifoldDescriptor::sphere(3);
  auto problem = eigvec_problem(3, 1, 77);
  RunConfig cfg;
  cfg.mode = ConsensusMode::Tracking;
  cfg.epsilon = 0.1;
  cfg.max_iters = 100;
  cfg.track_deviation = true;
  Configuration init{d, {unit(3, 2)}};
  const auto result = run(problem, cfg, init);
  CHECK(!result.aborted);
  for (const double dev : result.deviation) CHECK(dev <= 1e-12);
}

TEST_CASE("tracking mode rejects gradient noise and minibatches") {
  RunConfig cfg;
  cfg.mode = ConsensusMode::Tracking;
  cfg.noise_sigma = 0.1;
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);
  cfg.noise_sigma = 0.0;
  cfg.minibatch = true;
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);
}

TEST_CASE("single agent run reduces to centralized descent") {
  auto problem = eigvec_problem(4, 1, 123);
  RunConfig cfg;
  cfg.max_iters = 1000;
  cfg.master_seed = 3;
  RngStream init_stream(8, 0);
  Configuration init{problem.descriptor,
                     {mf::random_point(problem.descriptor, init_stream)}};
  const auto result = run(problem, cfg, init);
  CHECK(!result.aborted);
  CHECK(result.records.size() == 1000);
  CHECK(result.records.back().dist_to_oracle <= 1e-3);
}

TEST_CASE("init spread basics") {
  const auto d = ManifoldDescriptor::sphere(4);
  RngStream stream(6, 0);
  const Matrix center = mf::random_point(d, stream);

  RngStream s1(10, 0);
  const auto tight = init_spread(d, center, 8, 0.0, s1);
  for (const auto& p : tight.points) CHECK((p - center).norm() == 0.0);

  RngStream s2(10, 0);
  RngStream s3(10, 0);
  const auto a = init_spread(d, center, 8, 0.3, s2);
  const auto b = init_spread(d, center, 8, 0.3, s3);
  for (int i = 0; i < 8; ++i) CHECK((a.points[i] - b.points[i]).norm() == 0.0);
}

TEST_CASE("restart policies") {
  // large spread leaves the safeguard region; reset_to_best collapses the
  // configuration onto the best node and consensus follows
  auto problem = eigvec_problem(4, 8, 31);
  RngStream stream(12, 0);
  const Matrix center = mf::random_point(problem.descriptor, stream);
  const auto wild = init_spread(problem.descriptor, center, 8, 2.0, stream);

  RunConfig cfg;
  cfg.epsilon = 0.1;
  cfg.max_iters = 120;
  cfg.master_seed = 9;

  cfg.restart = RestartPolicy::ResetToBest;
  const auto reset = run(problem, cfg, wild);
  CHECK(!reset.init_in_s_conv);
  CHECK(reset.s_conv_violated);
  CHECK(reset.restarts >= 1);
  CHECK(reset.records.back().max_pair_dist_sq <= 1e-2);

  cfg.restart = RestartPolicy::Halt;
  const auto halted = run(problem, cfg, wild);
  CHECK(halted.s_conv_violated);
  CHECK(halted.records.size() < 120);

  cfg.restart = RestartPolicy::Ignore;
  const auto ignored = run(problem, cfg, wild);
  CHECK(ignored.s_conv_violated);
  CHECK((ignored.records.size() == 120 || ignored.aborted));
}

TEST_CASE("runs are deterministic across thread budgets") {
  auto problem = eigvec_problem(4, 10, 55);
  RngStream stream(14, 0);
  const Matrix center = mf::random_point(problem.descriptor, stream);
  const auto init = init_spread(problem.descriptor, center, 10, 0.2, stream);

  RunConfig cfg;
  cfg.epsilon = 0.1;
  cfg.max_iters = 50;
  cfg.noise_sigma = 0.05;
  cfg.master_seed = 21;

  setenv("MCONS_THREADS", "1", 1);
  const auto r1 = run(problem, cfg, init);
  setenv("MCONS_THREADS", "4", 1);
  const auto r4 = run(problem, cfg, init);
  unsetenv("MCONS_THREADS");

  REQUIRE(r1.records.size() == r4.records.size());
  for (std::size_t k = 0; k < r1.records.size(); ++k) {
    CHECK(r1.records[k].phi == r4.records[k].phi);
    CHECK(r1.records[k].max_pair_dist_sq == r4.records[k].max_pair_dist_sq);
    CHECK(r1.records[k].mean_cost == r4.records[k].mean_cost);
    CHECK(r1.records[k].dist_to_oracle == r4.records[k].dist_to_oracle);
  }
}

TEST_CASE("noise-free consensus run drives phi to zero") {
  auto problem = eigvec_problem(4, 10, 71);
  RngStream stream(16, 0);
  const Matrix center = mf::random_point(problem.descriptor, stream);
  const auto init = init_spread(problem.descriptor, center, 10, 0.2, stream);

  RunConfig cfg;
  cfg.epsilon = 0.1;
  cfg.max_iters = 400;
  cfg.delta0 = 0.05;
  cfg.master_seed = 2;
  cfg.restart = RestartPolicy::Ignore;
  cfg.track_deviation = true;

  const auto result = run(problem, cfg, init);
  CHECK(!result.aborted);
  CHECK(result.records.back().phi <= 1e-8);
  CHECK(result.records.back().max_pair_dist_sq <= 1e-8);

  // gradient consensus deviation stays below the delta bound
  for (std::size_t k = 0; k < result.deviation.size(); ++k) {
    CHECK(result.deviation[k] <= result.deviation_bound[k] + 1e-10);
  }
}

TEST_CASE("minibatch runs stay unbiased and converge loosely") {
  auto problem = eigvec_problem(4, 6, 81);
  RngStream stream(18, 0);
  const Matrix center = mf::random_point(problem.descriptor, stream);
  const auto init = init_spread(problem.descriptor, center, 6, 0.1, stream);

  RunConfig cfg;
  cfg.epsilon = 0.1;
  cfg.max_iters = 800;
  cfg.master_seed = 4;
  cfg.minibatch = true;

  const auto result = run(problem, cfg, init);
  CHECK(!result.aborted);
  CHECK(result.records.back().max_pair_dist_sq <= 1e-3);
  CHECK(result.records.back().dist_to_oracle <= 0.5);
}
