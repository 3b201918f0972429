#include <CLI11.hpp>
#include <cstdint>
#include <optional>
#include <string>

#include "mcons/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mcons - consensual distributed optimization on manifolds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "path to the experiment config")
      ->required();
  run->add_option("--out", out_dir, "override the output directory");

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of the configured gradients");
  gradcheck->add_option("--config", config_path, "path to the experiment config")
      ->required();

  auto* oracle = app.add_subcommand(
      "oracle", "compute the reference solution for the configured problem");
  oracle->add_option("--config", config_path, "path to the experiment config")
      ->required();

  int nodes = 0;
  double edge_prob = 0.0;
  std::uint64_t seed = 0;
  std::string out_path;
  auto* graphgen =
      app.add_subcommand("graphgen", "sample a connected Metropolis graph");
  graphgen->add_option("--nodes", nodes, "number of nodes")->required();
  graphgen->add_option("--edge-prob", edge_prob, "edge probability")
      ->required();
  graphgen->add_option("--seed", seed, "random seed")->required();
  graphgen->add_option("--out", out_path, "edge-list output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return mcons::cmd_run(config_path, out_dir.empty()
                                           ? std::nullopt
                                           : std::optional(out_dir));
  }
  if (gradcheck->parsed()) return mcons::cmd_gradcheck(config_path);
  if (oracle->parsed()) return mcons::cmd_oracle(config_path);
  if (graphgen->parsed()) {
    return mcons::cmd_graphgen(nodes, edge_prob, seed, out_path);
  }
  return 1;
}
