#include "mcons/config.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "mcons/io.hpp"
#include "mcons/oracle.hpp"

namespace mcons {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& need(const json& j, const std::string& key,
                 const std::string& where) {
  if (!j.contains(key)) fail(where, "missing required key '" + key + "'");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

std::uint64_t need_seed(const json& j, const std::string& key,
                        const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer()) {
    fail(where + "." + key, "seeds must be explicit integers");
  }
  return v.get<std::uint64_t>();
}

std::string resolve(const std::string& base, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base) / p).string();
}

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

ManifoldKind parse_manifold_kind(const std::string& s) {
  if (s == "sphere") return ManifoldKind::Sphere;
  if (s == "grassmann") return ManifoldKind::Grassmann;
  if (s == "euclidean") return ManifoldKind::Euclidean;
  fail("manifold.kind", "unknown kind '" + s + "'");
}

CostKind parse_cost_kind(const std::string& s) {
  if (s == "eigvec") return CostKind::Eigvec;
  if (s == "pca") return CostKind::Pca;
  if (s == "quadratic") return CostKind::Quadratic;
  fail("problem.kind", "unknown kind '" + s + "'");
}

RestartPolicy parse_restart(const std::string& s) {
  if (s == "halt") return RestartPolicy::Halt;
  if (s == "reset_to_best") return RestartPolicy::ResetToBest;
  if (s == "ignore") return RestartPolicy::Ignore;
  fail("algorithm.restart_policy", "unknown policy '" + s + "'");
}

std::string restart_name(RestartPolicy p) {
  switch (p) {
    case RestartPolicy::Halt:
      return "halt";
    case RestartPolicy::ResetToBest:
      return "reset_to_best";
    case RestartPolicy::Ignore:
      return "ignore";
  }
  return "?";
}

std::string kind_name(CostKind k) {
  switch (k) {
    case CostKind::Eigvec:
      return "eigvec";
    case CostKind::Pca:
      return "pca";
    case CostKind::Quadratic:
      return "quadratic";
  }
  return "?";
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("parse error in " + path + " at line " +
                      std::to_string(line_of_byte(text, e.byte)) + ": " +
                      e.what());
  }

  ExperimentConfig cfg;
  cfg.base_directory = fs::path(path).parent_path().string();
  if (cfg.base_directory.empty()) cfg.base_directory = ".";

  const json& manifold = need(j, "manifold", "config");
  cfg.manifold_kind =
      parse_manifold_kind(need(manifold, "kind", "manifold").get<std::string>());
  cfg.manifold_n = need(manifold, "n", "manifold").get<int>();
  cfg.manifold_r = get_or(manifold, "r", 1);

  const json& graph = need(j, "graph", "config");
  cfg.graph.source = need(graph, "source", "graph").get<std::string>();
  if (cfg.graph.source == "metropolis_random") {
    cfg.graph.nodes = need(graph, "nodes", "graph").get<int>();
    cfg.graph.edge_prob = need(graph, "edge_prob", "graph").get<double>();
    cfg.graph.seed = need_seed(graph, "seed", "graph");
  } else if (cfg.graph.source == "edge_list_file") {
    cfg.graph.path =
        resolve(cfg.base_directory, need(graph, "path", "graph").get<std::string>());
    if (!fs::exists(cfg.graph.path)) {
      fail("graph.path", "file does not exist: " + cfg.graph.path);
    }
  } else {
    fail("graph.source", "unknown source '" + cfg.graph.source + "'");
  }

  const json& problem = need(j, "problem", "config");
  cfg.problem_kind =
      parse_cost_kind(need(problem, "kind", "problem").get<std::string>());
  const json& data = need(problem, "data", "problem");
  cfg.data.source = need(data, "source", "problem.data").get<std::string>();
  if (cfg.data.source == "synthetic") {
    cfg.data.dims = need(data, "dims", "problem.data").get<int>();
    cfg.data.num_samples = get_or(data, "num_samples", cfg.graph.nodes);
    cfg.data.spectrum_decay = get_or(data, "spectrum_decay", 0.5);
    cfg.data.seed = need_seed(data, "seed", "problem.data");
  } else if (cfg.data.source == "file") {
    cfg.data.path =
        resolve(cfg.base_directory, need(data, "path", "problem.data").get<std::string>());
    if (!fs::exists(cfg.data.path)) {
      fail("problem.data.path", "file does not exist: " + cfg.data.path);
    }
  } else {
    fail("problem.data.source", "unknown source '" + cfg.data.source + "'");
  }
  if (cfg.problem_kind != CostKind::Quadratic) {
    cfg.partition_seed = need_seed(problem, "partition_seed", "problem");
  }
  cfg.minibatch = get_or(problem, "minibatch", false);
  cfg.corrupt_gradient = get_or(problem, "corrupt_gradient", false);

  const json& algo = need(j, "algorithm", "config");
  if (algo.contains("epsilon")) {
    const json& eps = algo.at("epsilon");
    if (eps.is_string()) {
      if (eps.get<std::string>() != "auto") {
        fail("algorithm.epsilon", "must be a number or \"auto\"");
      }
    } else {
      cfg.algorithm.epsilon = eps.get<double>();
    }
  }
  if (algo.contains("step_schedule")) {
    const json& s = algo.at("step_schedule");
    cfg.algorithm.schedule.a0 = get_or(s, "a0", 1.0);
    cfg.algorithm.schedule.k0 = get_or(s, "k0", 0);
    cfg.algorithm.schedule.p = get_or(s, "p", 1.0);
  }
  const std::string mode = get_or<std::string>(algo, "consensus_mode", "power");
  if (mode == "power") {
    cfg.algorithm.mode = ConsensusMode::Power;
  } else if (mode == "tracking") {
    cfg.algorithm.mode = ConsensusMode::Tracking;
  } else {
    fail("algorithm.consensus_mode", "unknown mode '" + mode + "'");
  }
  cfg.algorithm.delta0 = get_or(algo, "delta0", 0.1);
  cfg.algorithm.n_cap = get_or(algo, "n_cap", 200);
  cfg.algorithm.noise_sigma = get_or(algo, "noise_sigma", 0.0);
  cfg.algorithm.max_iters = get_or(algo, "max_iters", 1000);
  cfg.algorithm.restart =
      parse_restart(get_or<std::string>(algo, "restart_policy", "reset_to_best"));
  cfg.algorithm.master_seed = need_seed(algo, "master_seed", "algorithm");
  cfg.algorithm.minibatch = cfg.minibatch;

  const json& init = need(j, "init", "config");
  cfg.init_sigma = get_or(init, "sigma", 0.2);
  cfg.init_seed = need_seed(init, "seed", "init");

  if (j.contains("output")) {
    const json& out = j.at("output");
    cfg.output_directory = get_or<std::string>(out, "directory", "out");
    cfg.write_trajectory = get_or(out, "write_trajectory", false);
  }
  cfg.algorithm.keep_trajectory = cfg.write_trajectory;

  try {
    cfg.algorithm.validate();
  } catch (const Error& e) {
    fail("algorithm", e.what());
  }
  if (cfg.init_sigma < 0.0) fail("init.sigma", "must be nonnegative");
  return cfg;
}

std::string ExperimentConfig::echo() const {
  json j;
  j["manifold"] = {{"kind", ManifoldDescriptor{manifold_kind}.kind_name()},
                   {"n", manifold_n},
                   {"r", manifold_r}};
  if (graph.source == "metropolis_random") {
    j["graph"] = {{"source", graph.source},
                  {"nodes", graph.nodes},
                  {"edge_prob", graph.edge_prob},
                  {"seed", graph.seed}};
  } else {
    j["graph"] = {{"source", graph.source}, {"path", graph.path}};
  }
  json d;
  if (data.source == "synthetic") {
    d = {{"source", "synthetic"},
         {"dims", data.dims},
         {"num_samples", data.num_samples},
         {"spectrum_decay", data.spectrum_decay},
         {"seed", data.seed}};
  } else {
    d = {{"source", "file"}, {"path", data.path}};
  }
  j["problem"] = {{"kind", kind_name(problem_kind)},
                  {"data", d},
                  {"partition_seed", partition_seed},
                  {"minibatch", minibatch},
                  {"corrupt_gradient", corrupt_gradient}};
  j["algorithm"] = {
      {"epsilon", algorithm.epsilon ? json(*algorithm.epsilon) : json("auto")},
      {"step_schedule",
       {{"a0", algorithm.schedule.a0},
        {"k0", algorithm.schedule.k0},
        {"p", algorithm.schedule.p}}},
      {"consensus_mode",
       algorithm.mode == ConsensusMode::Power ? "power" : "tracking"},
      {"delta0", algorithm.delta0},
      {"n_cap", algorithm.n_cap},
      {"noise_sigma", algorithm.noise_sigma},
      {"max_iters", algorithm.max_iters},
      {"restart_policy", restart_name(algorithm.restart)},
      {"master_seed", algorithm.master_seed}};
  j["init"] = {{"sigma", init_sigma}, {"seed", init_seed}};
  j["output"] = {{"directory", output_directory},
                 {"write_trajectory", write_trajectory}};
  return j.dump();
}

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
  ManifoldDescriptor desc;
  switch (cfg.manifold_kind) {
    case ManifoldKind::Sphere:
      desc = ManifoldDescriptor::sphere(cfg.manifold_n);
      break;
    case ManifoldKind::Grassmann:
      desc = ManifoldDescriptor::grassmann(cfg.manifold_n, cfg.manifold_r);
      break;
    case ManifoldKind::Euclidean:
      desc = ManifoldDescriptor::euclidean(cfg.manifold_n, cfg.manifold_r);
      break;
  }

  NetworkGraph graph;
  if (cfg.graph.source == "metropolis_random") {
    graph = metropolis_weights(
        random_connected_graph(cfg.graph.nodes, cfg.graph.edge_prob,
                               cfg.graph.seed));
  } else {
    graph = metropolis_weights(load_edge_list(cfg.graph.path));
  }
  const int n_nodes = graph.num_nodes;

  std::vector<NodeCost> costs;
  std::optional<Matrix> oracle;
  if (cfg.problem_kind == CostKind::Quadratic) {
    if (desc.kind != ManifoldKind::Euclidean) {
      throw ConfigError("quadratic problems require the euclidean manifold");
    }
    // Random positive definite quadratic per node.
    RngStream stream(cfg.data.seed, 0x7175ULL);
    const int dim = cfg.data.dims > 0 ? cfg.data.dims : cfg.manifold_n;
    for (int i = 0; i < n_nodes; ++i) {
      Matrix g(dim, dim);
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) g(r, c) = stream.normal();
      }
      Matrix s = g.transpose() * g / static_cast<double>(dim) +
                 0.1 * Matrix::Identity(dim, dim);
      Vector offset(dim);
      for (int r = 0; r < dim; ++r) offset(r) = stream.normal();
      costs.push_back(NodeCost::quadratic(s, offset));
    }
  } else {
    Matrix samples;
    if (cfg.data.source == "synthetic") {
      samples = synthetic_dataset(cfg.data.dims, cfg.data.num_samples,
                                  cfg.data.spectrum_decay, cfg.data.seed);
    } else {
      samples = load_dataset(cfg.data.path);
    }
    if (samples.cols() != desc.ambient_rows) {
      throw ConfigError("data dimension " + std::to_string(samples.cols()) +
                        " does not match manifold rows " +
                        std::to_string(desc.ambient_rows));
    }
    costs = partition_dataset(samples, n_nodes, cfg.partition_seed,
                              cfg.problem_kind);
  }
  if (cfg.corrupt_gradient) {
    for (auto& c : costs) c.set_grad_corruption(1e-3);
  }

  Problem problem = Problem::make(desc, std::move(graph), std::move(costs));
  if (cfg.corrupt_gradient) problem.global_cost.set_grad_corruption(1e-3);

  switch (cfg.problem_kind) {
    case CostKind::Eigvec:
      problem.oracle_point =
          leading_eigenvector(problem.global_cost.gram()).value.coords;
      break;
    case CostKind::Pca:
      problem.oracle_point =
          top_subspace(problem.global_cost.gram(), cfg.manifold_r).value.coords;
      break;
    case CostKind::Quadratic: {
      // Joint minimizer solves S x = -grad(0) since grad(0) = -S c.
      const int rows = static_cast<int>(problem.global_cost.gram().rows());
      Matrix x(rows, 1);
      x.col(0) = problem.global_cost.gram().ldlt().solve(
          -problem.global_cost.euclidean_grad(desc, Matrix::Zero(rows, 1)));
      problem.oracle_point = x;
      break;
    }
  }

  RngStream init_stream(cfg.init_seed, 0x696E6974ULL);
  const Matrix center = mf::random_point(desc, init_stream);
  Configuration init =
      init_spread(desc, center, n_nodes, cfg.init_sigma, init_stream);

  return BuiltExperiment{cfg, std::move(problem), std::move(init)};
}

int cmd_run(const std::string& config_path,
            const std::optional<std::string>& out_override) {
  ExperimentConfig cfg;
  BuiltExperiment built;
  try {
    cfg = load_experiment_config(config_path);
    if (out_override) cfg.output_directory = *out_override;
    built = build_experiment(cfg);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  fs::create_directories(cfg.output_directory);
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result = run(built.problem, cfg.algorithm, built.init);
  const auto t1 = std::chrono::steady_clock::now();
  const double wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();

  const fs::path out_dir(cfg.output_directory);
  write_metrics_csv((out_dir / "metrics.csv").string(), result.records);
  if (cfg.write_trajectory) {
    write_trajectory_csv((out_dir / "trajectory.csv").string(),
                         result.trajectory);
  }

  const IterationRecord* last =
      result.records.empty() ? nullptr : &result.records.back();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, std::string>> summary = {
      {"final_phi", format_g17(last ? last->phi : nan)},
      {"final_max_pair_dist",
       format_g17(last ? std::sqrt(last->max_pair_dist_sq) : nan)},
      {"final_dist_to_oracle", format_g17(last ? last->dist_to_oracle : nan)},
      {"restarts", std::to_string(result.restarts)},
      {"wall_ms", format_g17(wall_ms)},
      {"iterations", std::to_string(result.records.size())},
      {"aborted", result.aborted ? "1" : "0"},
      {"abort_reason", result.abort_reason},
      {"init_in_s_conv", result.init_in_s_conv ? "1" : "0"},
      {"s_conv_violated", result.s_conv_violated ? "1" : "0"},
      {"epsilon_used", format_g17(result.epsilon_used)},
      {"mu_hat", format_g17(result.mu_hat)},
      {"comm_rounds", std::to_string(result.comm_rounds)},
      {"config", cfg.echo()},
  };
  write_key_values((out_dir / "summary.txt").string(), summary);

  std::cout << "wrote " << (out_dir / "metrics.csv").string() << " ("
            << result.records.size() << " rows)\n";
  if (!result.init_in_s_conv) {
    std::cerr << "warning: initial configuration outside the convexity "
                 "safeguard region\n";
  }
  if (result.aborted) {
    std::cerr << "run aborted: " << result.abort_reason << "\n";
    return 2;
  }
  return 0;
}

int cmd_gradcheck(const std::string& config_path) {
  BuiltExperiment built;
  try {
    built = build_experiment(load_experiment_config(config_path));
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  const auto& desc = built.problem.descriptor;
  const NodeCost& cost = built.problem.global_cost;

  ScalarField field{
      [&](const Matrix& x) { return cost.value(desc, x); },
      [&](const Matrix& x) { return cost.riemannian_grad(desc, x); }};

  RngStream stream(built.config.init_seed, 0x4744ULL);
  double worst_cost = 0.0;
  for (int p = 0; p < 20; ++p) {
    const Matrix x = mf::random_point(desc, stream);
    worst_cost = std::max(
        worst_cost, fd_gradient_check(desc, field, x, 5, 1e-5, stream));
  }

  double worst_phi = 0.0;
  for (int p = 0; p < 20; ++p) {
    const Matrix center = mf::random_point(desc, stream);
    const Configuration w = init_spread(desc, center,
                                        built.problem.graph.num_nodes,
                                        0.1, stream);
    worst_phi = std::max(
        worst_phi, fd_potential_check(w, built.problem.graph, 5, 1e-5, stream));
  }

  std::cout << "cost gradient max relative error: " << worst_cost << "\n";
  std::cout << "potential gradient max relative error: " << worst_phi << "\n";
  const bool ok = worst_cost <= 1e-4 && worst_phi <= 1e-4;
  std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << "\n";
  return ok ? 0 : 5;
}

int cmd_oracle(const std::string& config_path) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment_config(config_path);
    if (cfg.problem_kind == CostKind::Quadratic) {
      throw ConfigError("oracle command requires an eigvec or pca problem");
    }
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    const BuiltExperiment built = build_experiment(cfg);
    const Matrix a = built.problem.global_cost.gram();
    const OracleSolution sol = cfg.problem_kind == CostKind::Eigvec
                                   ? leading_eigenvector(a)
                                   : top_subspace(a, cfg.manifold_r);
    fs::create_directories(cfg.output_directory);
    const fs::path out = fs::path(cfg.output_directory) / "oracle.txt";
    write_matrix_text(out.string(), sol.value.coords);
    std::cout << "residual=" << format_g17(sol.residual) << "\n";
    std::cout << "eigenvalues=";
    for (int i = 0; i < sol.eigenvalues.size(); ++i) {
      std::cout << (i ? "," : "") << format_g17(sol.eigenvalues(i));
    }
    std::cout << "\nwrote " << out.string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    const std::string what = e.what();
    if (what.find("degenerate") != std::string::npos) return 3;
    return 1;
  }
}

int cmd_graphgen(int nodes, double edge_prob, std::uint64_t seed,
                 const std::string& out_path) {
  try {
    const Eigen::MatrixXi adj = random_connected_graph(nodes, edge_prob, seed);
    const NetworkGraph g = metropolis_weights(adj);
    save_edge_list(g, out_path);
    std::cout << "nodes=" << g.num_nodes << " edges=" << g.edges.size()
              << "\n";
    std::cout << "gamma=" << format_g17(g.spectral_gap_norm) << "\n";
    std::cout << "diameter=" << g.diameter << "\n";
    std::cout << "self_weight_min=" << format_g17(g.weights.diagonal().minCoeff())
              << " self_weight_max=" << format_g17(g.weights.diagonal().maxCoeff())
              << "\n";
    if (g.lazy_mixed) std::cout << "lazy_mixed=1\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "graphgen error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace mcons
