#pragma once

#include <optional>
#include <string>

#include "mcons/engine.hpp"

namespace mcons {

/// Configuration file error; the message carries a line number for parse
/// failures and a field path for semantic ones.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GraphSpec {
  std::string source;  // "metropolis_random" | "edge_list_file"
  int nodes = 0;
  double edge_prob = 0.0;
  std::uint64_t seed = 0;
  std::string path;
};

struct DataSpec {
  std::string source;  // "synthetic" | "file"
  int dims = 0;
  int num_samples = 0;
  double spectrum_decay = 1.0;
  std::uint64_t seed = 0;
  std::string path;
};

struct ExperimentConfig {
  // manifold
  ManifoldKind manifold_kind = ManifoldKind::Sphere;
  int manifold_n = 0;
  int manifold_r = 1;
  // graph
  GraphSpec graph;
  // problem
  CostKind problem_kind = CostKind::Eigvec;
  DataSpec data;
  std::uint64_t partition_seed = 0;
  bool minibatch = false;
  bool corrupt_gradient = false;  // test fixture; breaks gradcheck on purpose
  // algorithm
  RunConfig algorithm;
  // init
  double init_sigma = 0.2;
  std::uint64_t init_seed = 0;
  // output
  std::string output_directory = "out";
  bool write_trajectory = false;

  std::string base_directory;  // directory of the config file

  /// Effective configuration (defaults filled in) as single-line JSON.
  std::string echo() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

struct BuiltExperiment {
  ExperimentConfig config;
  Problem problem;
  Configuration init;
};

BuiltExperiment build_experiment(const ExperimentConfig& cfg);

// CLI entry points. Exit codes: 0 ok, 1 bad config, 2 run aborted,
// 3 degenerate spectrum, 4 graph generation failed.
int cmd_run(const std::string& config_path,
            const std::optional<std::string>& out_override);
int cmd_gradcheck(const std::string& config_path);
int cmd_oracle(const std::string& config_path);
int cmd_graphgen(int nodes, double edge_prob, std::uint64_t seed,
                 const std::string& out_path);

}  // namespace mcons
