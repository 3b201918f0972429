#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcons/consensus.hpp"
#include "mcons/costs.hpp"

namespace mcons {

enum class ConsensusMode { Power, Tracking };
enum class RestartPolicy { Halt, ResetToBest, Ignore };

/// Diminishing step family a_k = a0 / (k + k0 + 1)^p. The exponent range
/// (0.5, 1] makes the sum diverge while the squared sum stays finite, and
/// bounds consecutive ratios by 2.
struct StepSchedule {
  double a0 = 1.0;
  int k0 = 0;
  double p = 1.0;

  double at(int k) const {
    return a0 / std::pow(static_cast<double>(k + k0 + 1), p);
  }
  void validate() const;
};

struct RunConfig {
  std::optional<double> epsilon;  // empty = auto: 1 / estimated mu_max
  StepSchedule schedule;
  ConsensusMode mode = ConsensusMode::Power;
  double delta0 = 0.1;  // power mode mixing target delta_k = delta0/(k+1)
  int n_cap = 200;      // cap on consensus rounds per iteration
  double noise_sigma = 0.0;
  int max_iters = 1000;
  RestartPolicy restart = RestartPolicy::ResetToBest;
  std::uint64_t master_seed = 0;
  bool minibatch = false;        // one data sample per node per iteration
  bool track_deviation = false;  // record gradient-consensus deviations
  bool keep_trajectory = false;  // store every configuration (memory!)

  void validate() const;
};

struct IterationRecord {
  int k = 0;
  double phi = 0.0;
  double max_pair_dist_sq = 0.0;
  std::vector<double> cost_values;  // global average cost at each node
  double mean_cost = 0.0;
  double min_cost = 0.0;
  double max_cost = 0.0;
  double dist_to_oracle = std::numeric_limits<double>::quiet_NaN();
  bool in_s_conv = true;
  int n_k = 1;
  double a_k = 0.0;
  double delta_k = 0.0;
};

struct RunResult {
  std::vector<IterationRecord> records;
  Configuration final_config;
  int restarts = 0;
  bool init_in_s_conv = true;
  bool s_conv_violated = false;
  bool aborted = false;
  std::string abort_reason;
  double epsilon_used = 0.0;
  double mu_hat = 0.0;
  long long comm_rounds = 0;
  // filled when cfg.track_deviation: per-iteration gradient-consensus
  // deviation from the exact transported average and its bound
  std::vector<double> deviation;
  std::vector<double> deviation_bound;
  // filled when cfg.keep_trajectory
  std::vector<Configuration> trajectory;
};

struct Problem {
  ManifoldDescriptor descriptor;
  NetworkGraph graph;
  std::vector<NodeCost> costs;
  NodeCost global_cost;                // pooled data, used for metrics
  std::optional<Matrix> oracle_point;  // reference solution if known

  static Problem make(const ManifoldDescriptor& d, NetworkGraph g,
                      std::vector<NodeCost> costs,
                      std::optional<Matrix> oracle = std::nullopt);
};

/// Smallest n with gamma^n <= delta0/(k+1), at least 1, capped at n_cap.
int n_k_schedule(double gamma, int k, double delta0, int n_cap);

/// xi_i = sum_j (Q^{n_k})_ij . transport(v_j -> v_i, grads_j).
std::vector<Matrix> gradient_consensus_power(const Configuration& v,
                                             const std::vector<Matrix>& grads,
                                             const NetworkGraph& g, int n_k);

/// One gradient-tracking update; g, grads_prev and v_prev describe iteration
/// k-1 and are replaced by the new values.
struct TrackerState {
  Configuration v_prev;
  std::vector<Matrix> g;
  std::vector<Matrix> grad_prev;
};
void gradient_consensus_tracking(const NetworkGraph& g_net,
                                 const Configuration& v_new,
                                 const std::vector<Matrix>& grads_new,
                                 TrackerState& state);

/// w_i = retract(v_i, -a_k xi_i).
Configuration descent_step(const Configuration& v,
                           const std::vector<Matrix>& xi, double a_k);

/// Distance from a point to the reference solution (sign/rotation invariant
/// where the manifold requires it).
double dist_to_oracle(const ManifoldDescriptor& d, const Matrix& x,
                      const Matrix& oracle);

/// Agents spread around a center by exponentiating Gaussian tangent draws.
Configuration init_spread(const ManifoldDescriptor& d, const Matrix& center,
                          int n_agents, double sigma, RngStream& stream);

RunResult run(const Problem& problem, const RunConfig& cfg,
              const Configuration& init);

}  // namespace mcons
