// Acceptance suite: one check per release criterion, each printing a
// [PASS]/[FAIL] line. The process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mcons/config.hpp"
#include "mcons/engine.hpp"
#include "mcons/io.hpp"
#include "mcons/oracle.hpp"

using namespace mcons;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok,
            const std::string& detail) {
  std::printf("[%s] C%02d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct SphereRun {
  RunResult result;
  double eigengap = 0.0;
};

/// Leading-eigenvector experiment on S^3 with N = 30 agents.
SphereRun sphere_experiment(int seed, double edge_prob, double sigma_init,
                            int init_seed_base, double epsilon,
                            const StepSchedule& schedule, int max_iters,
                            RestartPolicy restart, ConsensusMode mode,
                            bool track_deviation) {
  const auto d = ManifoldDescriptor::sphere(4);
  auto g = metropolis_weights(random_connected_graph(30, edge_prob, seed));
  const Matrix data = synthetic_dataset(4, 30, 0.5, 100 + seed);
  auto costs = partition_dataset(data, 30, 300 + seed, CostKind::Eigvec);
  auto problem = Problem::make(d, std::move(g), std::move(costs));
  const auto oracle = leading_eigenvector(problem.global_cost.gram());
  problem.oracle_point = oracle.value.coords;

  RngStream init_stream(init_seed_base + seed, 0);
  const Matrix center = mf::random_point(d, init_stream);
  const auto init = init_spread(d, center, 30, sigma_init, init_stream);

  RunConfig cfg;
  cfg.epsilon = epsilon;
  cfg.schedule = schedule;
  cfg.mode = mode;
  cfg.delta0 = 0.01;
  cfg.n_cap = 400;
  cfg.max_iters = max_iters;
  cfg.master_seed = (mode == ConsensusMode::Tracking ? 700 : 600) + seed;
  cfg.restart = restart;
  cfg.track_deviation = track_deviation;

  SphereRun out{run(problem, cfg, init),
                oracle.eigenvalues(0) - oracle.eigenvalues(1)};
  return out;
}

bool meets_consensus_thresholds(const RunResult& r) {
  if (r.aborted || r.records.empty()) return false;
  const auto& last = r.records.back();
  return last.max_pair_dist_sq <= 1e-4 &&
         (last.max_cost - last.min_cost) <= 1e-3;
}

// --- criteria 1 and 2: sphere experiment reproduction and correctness ------

std::vector<SphereRun> g_sphere_runs;

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  int pass = 0;
  for (int seed = 0; seed < 20; ++seed) {
    g_sphere_runs.push_back(sphere_experiment(
        seed, 0.15, 0.2, 200, 0.1, {1.0, 0, 1.0}, 1000,
        RestartPolicy::Ignore, ConsensusMode::Power, false));
    if (meets_consensus_thresholds(g_sphere_runs.back().result)) ++pass;
  }
  const double secs = seconds_since(t0);
  std::ostringstream detail;
  detail << pass << "/20 seeds reach d^2<=1e-4 and cost spread<=1e-3 at k=1000"
         << " in " << std::fixed << secs << " s";
  report(1, "sphere consensus reproduction", pass >= 18 && secs <= 30.0,
         detail.str());
}

void criterion_2() {
  int pass = 0;
  bool gaps_ok = true;
  for (const auto& sr : g_sphere_runs) {
    gaps_ok = gaps_ok && sr.eigengap >= 0.5;
    if (!sr.result.records.empty() &&
        std::cos(sr.result.records.back().dist_to_oracle) >= 0.99) {
      ++pass;
    }
  }
  std::ostringstream detail;
  detail << pass << "/20 seeds align with the oracle eigenvector "
         << "(|cos| >= 0.99), eigengaps >= 0.5: " << (gaps_ok ? "yes" : "NO");
  report(2, "correct optimum", pass >= 18 && gaps_ok, detail.str());
}

// --- criterion 3: consensus failure and restart recovery -------------------

void criterion_3() {
  int failed = 0;
  int recovered = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto sr = sphere_experiment(seed, 0.075, 2.0, 500, 0.05,
                                      {1.0, 0, 1.0}, 1000,
                                      RestartPolicy::Ignore,
                                      ConsensusMode::Power, false);
    const auto& r = sr.result;
    const double d2 = (r.aborted || r.records.empty())
                          ? 1e9
                          : r.records.back().max_pair_dist_sq;
    if (r.s_conv_violated && d2 > 1e-2) {
      ++failed;
      const auto rec = sphere_experiment(seed, 0.075, 2.0, 500, 0.05,
                                         {1.0, 0, 1.0}, 1000,
                                         RestartPolicy::ResetToBest,
                                         ConsensusMode::Power, false);
      if (meets_consensus_thresholds(rec.result)) ++recovered;
    }
  }
  std::ostringstream detail;
  detail << failed << "/20 seeds fail under ignore (flag fired, d^2 > 1e-2); "
         << recovered << "/" << failed << " recover under reset_to_best";
  const bool ok =
      failed >= 5 && recovered * 20 >= failed * 18;  // >= 90% recovery
  report(3, "consensus failure and restart recovery", ok, detail.str());
}

// --- criterion 4: monotone decrease of the consensus potential -------------

void criterion_4() {
  const auto d = ManifoldDescriptor::sphere(4);
  const auto g = metropolis_weights(random_connected_graph(10, 0.35, 77));
  RngStream stream(88, 0);
  int decrease = 0;
  int strict = 0;
  int strict_total = 0;
  int tried = 0;
  while (tried < 100) {
    const Matrix center = mf::random_point(d, stream);
    const Configuration w = init_spread(d, center, 10, 0.035, stream);
    const double mu = estimate_mu_max(w, g, 600, stream);
    ConsensusParams params;
    params.epsilon = 1.0 / mu;
    params.mu_max = mu;
    params.r_c = d.convexity_radius;
    params.g_diam = g.diameter;
    params.s_conv_threshold =
        params.r_c * params.r_c / (2.0 * static_cast<double>(g.diameter));
    if (!in_s_conv(w, g, params)) continue;
    ++tried;
    const auto v = consensus_step(w, g, params);
    if (potential(v, g) <= potential(w, g)) ++decrease;
    double grad_sq = 0.0;
    for (int i = 0; i < w.size(); ++i) {
      grad_sq += grad_potential(w, g, i).squaredNorm();
    }
    if (std::sqrt(grad_sq) > 1e-8) {
      ++strict_total;
      if (potential(v, g) < potential(w, g)) ++strict;
    }
  }
  std::ostringstream detail;
  detail << decrease << "/100 configurations decrease phi with eps=1/mu_hat; "
         << strict << "/" << strict_total << " strictly";
  report(4, "monotone consensus decrease", decrease == 100 &&
                                               strict == strict_total,
         detail.str());
}

// --- criterion 5: delta bound and round schedule ----------------------------

void criterion_5() {
  bool schedule_ok = true;
  const double delta0 = 0.1;
  for (int gseed = 0; gseed < 20 && schedule_ok; ++gseed) {
    const int n = 5 + (gseed * 7) % 24;
    const double p = 0.25 + 0.03 * (gseed % 10);
    const auto g = metropolis_weights(random_connected_graph(n, p, gseed));
    int cached_nk = -1;
    double cached_delta = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const int n_k = n_k_schedule(g.spectral_gap_norm, k, delta0, 1000000);
      if (n_k != cached_nk) {
        cached_delta = delta(g, n_k);
        cached_nk = n_k;
      }
      if (cached_delta > delta0 / (k + 1) + 1e-15) {
        schedule_ok = false;
        break;
      }
    }
  }

  // in-run deviation against the transported-average bound
  const auto sr = sphere_experiment(0, 0.15, 0.2, 200, 0.1, {1.0, 0, 1.0},
                                    1000, RestartPolicy::Ignore,
                                    ConsensusMode::Power, true);
  bool deviation_ok = !sr.result.aborted;
  double worst_margin = 0.0;
  for (std::size_t k = 0; k < sr.result.deviation.size(); ++k) {
    const double slack =
        sr.result.deviation[k] - sr.result.deviation_bound[k] - 1e-10;
    worst_margin = std::max(worst_margin, slack);
    if (slack > 0) deviation_ok = false;
  }
  std::ostringstream detail;
  detail << "delta(Q, n_k) <= delta0/(k+1) on 20 graphs for k<=1000: "
         << (schedule_ok ? "yes" : "NO")
         << "; in-run deviation within N delta_k max||grad|| at every "
            "iteration: "
         << (deviation_ok ? "yes" : "NO");
  report(5, "mixing bound and round schedule", schedule_ok && deviation_ok,
         detail.str());
}

// --- criterion 6: gradient correctness --------------------------------------

void criterion_6() {
  RngStream stream(99, 0);
  double worst_eig = 0.0;
  double worst_pca = 0.0;
  double worst_phi = 0.0;

  {
    const auto d = ManifoldDescriptor::sphere(4);
    const auto cost = NodeCost::eigvec(synthetic_dataset(4, 30, 0.5, 101));
    ScalarField f{[&](const Matrix& x) { return cost.value(d, x); },
                  [&](const Matrix& x) { return cost.riemannian_grad(d, x); }};
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix x = mf::random_point(d, stream);
      worst_eig =
          std::max(worst_eig, fd_gradient_check(d, f, x, 5, 1e-5, stream));
    }
  }
  {
    const auto d = ManifoldDescriptor::grassmann(50, 3);
    const auto cost = NodeCost::pca(synthetic_dataset(50, 500, 0.8, 102));
    ScalarField f{[&](const Matrix& x) { return cost.value(d, x); },
                  [&](const Matrix& x) { return cost.riemannian_grad(d, x); }};
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix x = mf::random_point(d, stream);
      worst_pca =
          std::max(worst_pca, fd_gradient_check(d, f, x, 5, 1e-5, stream));
    }
  }
  {
    const auto d = ManifoldDescriptor::sphere(3);
    const auto g = metropolis_weights(random_connected_graph(10, 0.4, 103));
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix center = mf::random_point(d, stream);
      const Configuration w = init_spread(d, center, 10, 0.15, stream);
      worst_phi =
          std::max(worst_phi, fd_potential_check(w, g, 5, 1e-5, stream));
    }
  }
  std::ostringstream detail;
  detail << std::scientific << "max relative FD error: eigvec " << worst_eig
         << ", pca " << worst_pca << ", phi " << worst_phi;
  report(6, "gradient correctness",
         worst_eig <= 1e-4 && worst_pca <= 1e-4 && worst_phi <= 1e-4,
         detail.str());
}

// --- criterion 7: transport / exp / log invariants ---------------------------

void criterion_7() {
  bool ok = true;
  std::string breach;
  for (const auto& d : {ManifoldDescriptor::sphere(4),
                        ManifoldDescriptor::grassmann(6, 2)}) {
    RngStream stream(111, d.kind == ManifoldKind::Sphere ? 0 : 1);
    for (int trial = 0; trial < 1000; ++trial) {
      const Matrix x = mf::random_point(d, stream);

      // transport: isometric on the sphere, contractive on the grassmannian
      Matrix y = mf::random_point(d, stream);
      if (mf::within_injectivity(d, x, y)) {
        const Matrix v = mf::random_tangent(d, x, 1.0, stream);
        const Matrix tv = mf::transport(d, x, y, v);
        if (d.kind == ManifoldKind::Sphere) {
          if (std::abs(tv.norm() - v.norm()) > 1e-10) {
            ok = false;
            breach = "sphere transport norm";
          }
        } else if (tv.norm() > v.norm() + 1e-10) {
          ok = false;
          breach = "grassmann transport contraction";
        }
      }

      // exp/log roundtrip inside 0.9 of the injectivity radius
      Matrix w = mf::random_tangent(d, x, 1.0, stream);
      const double target =
          (0.05 + 0.85 * stream.uniform()) * 0.9 * d.injectivity_radius;
      w *= target / w.norm();
      const Matrix z = mf::exp(d, x, w);
      if (mf::distance(d, mf::exp(d, x, mf::log(d, x, z)), z) > 1e-8) {
        ok = false;
        breach = "exp/log roundtrip";
      }

      // retraction bound
      Matrix step = mf::random_tangent(d, x, 1.0, stream);
      step *= stream.uniform() / std::max(step.norm(), 1e-12);
      if (mf::distance(d, x, mf::retract(d, x, step)) > step.norm() + 1e-10) {
        ok = false;
        breach = "retraction bound";
      }
    }
  }
  report(7, "transport/exp/log invariants", ok,
         ok ? "1000 random cases per manifold within tolerances"
            : "violated: " + breach);
}

// --- criterion 8: gradient tracking -----------------------------------------

void criterion_8() {
  // (a) exact tracking identity on flat space, K2 and ring-6
  bool flat_ok = true;
  {
    const auto d = ManifoldDescriptor::euclidean(3);
    RngStream stream(123, 0);
    for (const int nodes : {2, 6}) {
      Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(nodes, nodes);
      if (nodes == 2) {
        adj(0, 1) = adj(1, 0) = 1;
      } else {
        for (int i = 0; i < nodes; ++i) {
          adj(i, (i + 1) % nodes) = adj((i + 1) % nodes, i) = 1;
        }
      }
      std::vector<NodeCost> costs;
      for (int i = 0; i < nodes; ++i) {
        Matrix m(3, 3);
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) m(r, c) = stream.normal();
        }
        Vector offset(3);
        for (int r = 0; r < 3; ++r) offset(r) = stream.normal();
        costs.push_back(NodeCost::quadratic(
            m.transpose() * m / 3.0 + 0.2 * Matrix::Identity(3, 3), offset));
      }
      auto problem =
          Problem::make(d, metropolis_weights(adj), std::move(costs));
      Configuration init{d, {}};
      for (int i = 0; i < nodes; ++i) {
        Matrix p(3, 1);
        for (int r = 0; r < 3; ++r) p(r, 0) = stream.normal();
        init.points.push_back(p);
      }
      RunConfig cfg;
      cfg.mode = ConsensusMode::Tracking;
      cfg.epsilon = 0.3;
      cfg.max_iters = 1000;
      cfg.track_deviation = true;
      cfg.master_seed = 5;
      const auto r = run(problem, cfg, init);
      if (r.aborted || r.records.size() != 1000) flat_ok = false;
      for (const double dev : r.deviation) {
        if (dev > 1e-10) flat_ok = false;
      }
    }
  }

  // (b) curvature-scaled tolerance on the sphere. The bound uses the running
  // maxima of the pairwise spread and gradient norm: transports are
  // isometric, so holonomy picked up while the agents were spread out stays
  // in the trackers even after the spread has collapsed.
  bool sphere_tol_ok = true;
  double worst_ratio = 0.0;
  for (int seed = 0; seed < 3; ++seed) {
    const auto sr = sphere_experiment(seed, 0.15, 0.2, 200, 0.1,
                                      {3.0, 30, 1.0}, 2000,
                                      RestartPolicy::Ignore,
                                      ConsensusMode::Tracking, true);
    if (sr.result.aborted) {
      sphere_tol_ok = false;
      continue;
    }
    double running_bound = 0.0;
    for (std::size_t k = 0; k < sr.result.deviation.size(); ++k) {
      running_bound = std::max(running_bound, sr.result.deviation_bound[k]);
      if (running_bound > 0.0) {
        worst_ratio =
            std::max(worst_ratio, sr.result.deviation[k] / running_bound);
      }
      if (sr.result.deviation[k] > running_bound + 1e-10) {
        sphere_tol_ok = false;
      }
    }
  }

  // (c) tracking reaches the criterion-2 accuracy with one round per step
  int accurate = 0;
  bool rounds_ok = true;
  for (int seed = 0; seed < 20; ++seed) {
    const auto sr = sphere_experiment(seed, 0.15, 0.2, 200, 0.1,
                                      {3.0, 30, 1.0}, 2000,
                                      RestartPolicy::Ignore,
                                      ConsensusMode::Tracking, false);
    if (sr.result.aborted) continue;
    if (std::cos(sr.result.records.back().dist_to_oracle) >= 0.99) ++accurate;
    if (sr.result.comm_rounds != 2000) rounds_ok = false;
  }

  std::ostringstream detail;
  detail << "flat identity <= 1e-10 at every k: " << (flat_ok ? "yes" : "NO")
         << "; sphere tolerance (running max, worst ratio " << std::scientific
         << worst_ratio << "): " << (sphere_tol_ok ? "yes" : "NO") << "; "
         << accurate << "/20 reach oracle accuracy with one round/iter ("
         << (rounds_ok ? "rounds exact" : "ROUNDS WRONG") << ")";
  report(8, "gradient tracking", flat_ok && sphere_tol_ok && accurate >= 18 &&
                                     rounds_ok,
         detail.str());
}

// --- criterion 9: PCA at desk scale -----------------------------------------

void criterion_9() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = ManifoldDescriptor::grassmann(50, 3);
  int pass = 0;
  for (int seed = 0; seed < 10; ++seed) {
    auto g = metropolis_weights(random_connected_graph(10, 0.4, 50 + seed));
    const Matrix data = synthetic_dataset(50, 2000, 0.8, 150 + seed);
    auto costs = partition_dataset(data, 10, 250 + seed, CostKind::Pca);
    auto problem = Problem::make(d, std::move(g), std::move(costs));
    problem.oracle_point =
        top_subspace(problem.global_cost.gram(), 3).value.coords;

    RngStream init_stream(350 + seed, 0);
    const Matrix center = mf::random_point(d, init_stream);
    const auto init = init_spread(d, center, 10, 0.02, init_stream);

    RunConfig cfg;
    cfg.epsilon = 0.1;
    cfg.schedule = {0.1, 20, 1.0};
    cfg.delta0 = 0.01;
    cfg.n_cap = 400;
    cfg.max_iters = 1400;
    cfg.master_seed = 450 + seed;
    cfg.restart = RestartPolicy::Ignore;

    const auto r = run(problem, cfg, init);
    if (r.aborted) continue;
    const auto& last = r.records.back();
    if (last.dist_to_oracle <= 0.05 && last.max_pair_dist_sq <= 1e-4) ++pass;
  }
  const double secs = seconds_since(t0);
  const bool full_config_present =
      fs::exists(fs::path(MCONS_CONFIG_DIR) / "pca_full.json");
  std::ostringstream detail;
  detail << pass
         << "/10 seeds reach subspace distance <= 0.05 and d^2 <= 1e-4 in "
         << std::fixed << secs << " s; full-size config bundled: "
         << (full_config_present ? "yes" : "NO");
  report(9, "distributed PCA at desk scale",
         pass >= 8 && secs <= 60.0 && full_config_present, detail.str());
}

// --- criterion 10: flow-comparison scaling ----------------------------------

void criterion_10() {
  const auto d = ManifoldDescriptor::sphere(4);
  Matrix a = Matrix::Zero(4, 4);
  a.diagonal() << 2.5, 1.5, 1.0, 0.5;
  const auto cost = NodeCost::eigvec(a.cwiseSqrt());
  ScalarField field{[&](const Matrix& x) { return cost.value(d, x); },
                    [&](const Matrix& x) { return cost.riemannian_grad(d, x); }};
  Matrix x0(4, 1);
  x0 << 0.8, 0.5, 0.2, 0.27;
  x0 /= x0.norm();

  const double steps[4] = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
  double sups[4];
  for (int i = 0; i < 4; ++i) {
    const auto path = constant_step_iterates(d, field, x0, steps[i], 1.0);
    sups[i] = compare_to_flow(d, path, field, 1.0);
  }
  bool ok = true;
  std::ostringstream detail;
  detail << "sup-distance ratios per halving:";
  for (int i = 0; i < 3; ++i) {
    const double ratio = sups[i] / sups[i + 1];
    detail << " " << std::fixed << ratio;
    if (ratio < 1.5 || ratio > 3.0) ok = false;
  }
  report(10, "flow comparison scales with the step", ok, detail.str());
}

// --- criterion 11: byte-identical reruns -------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_11() {
  const std::string cli = MCONS_CLI_PATH;
  const fs::path config = fs::path(MCONS_CONFIG_DIR) / "sphere_n30.json";
  const fs::path base = fs::temp_directory_path() / "mcons_acceptance_det";
  fs::remove_all(base);
  fs::create_directories(base);

  auto run_once = [&](const std::string& threads, const std::string& tag) {
    const fs::path out = base / tag;
    const std::string cmd = "MCONS_THREADS=" + threads + " " + cli +
                            " run --config " + config.string() + " --out " +
                            out.string() + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0 ? slurp(out / "metrics.csv")
                                         : std::string();
  };

  const std::string a = run_once("1", "t1a");
  const std::string b = run_once("1", "t1b");
  const std::string c = run_once("4", "t4");
  const bool ok = !a.empty() && a == b && a == c;
  report(11, "deterministic metrics across reruns and thread budgets", ok,
         ok ? "three runs byte-identical (MCONS_THREADS 1, 1, 4)"
            : "metrics.csv differ between reruns");
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  std::printf("acceptance: %d failures, %.1f s total\n", g_failures,
              seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
