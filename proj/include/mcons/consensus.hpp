#pragma once

#include <vector>

#include "mcons/manifold.hpp"
#include "mcons/network.hpp"

namespace mcons {

/// Stacked configuration: one point per network node, shared descriptor.
struct Configuration {
  ManifoldDescriptor descriptor;
  std::vector<Matrix> points;

  Configuration() = default;
  Configuration(ManifoldDescriptor d, std::vector<Matrix> pts)
      : descriptor(d), points(std::move(pts)) {}

  int size() const { return static_cast<int>(points.size()); }
  ManifoldPoint point(int i) const { return {descriptor, points[i]}; }
};

struct ConsensusParams {
  double epsilon = 0.0;
  double mu_max = 0.0;
  double r_c = 0.0;
  int g_diam = 0;
  double s_conv_threshold = 0.0;  // r_c^2 / (2 g_diam)

  /// Validates epsilon against (0, 2/mu_max) and derives the safeguard
  /// threshold from the descriptor's convexity radius and the graph diameter.
  static ConsensusParams make(const ManifoldDescriptor& d,
                              const NetworkGraph& g, double epsilon,
                              double mu_max);
};

/// Weighted consensus potential: 1/2 sum over edges of q_ij d^2(w_i, w_j).
double potential(const Configuration& w, const NetworkGraph& g);

/// Same sum without the q_ij factors; this is what the safeguard threshold
/// bounds against.
double potential_unweighted(const Configuration& w, const NetworkGraph& g);

/// Riemannian gradient of the potential in node i's slot:
/// -sum_j q_ij log_{w_i}(w_j).
Matrix grad_potential(const Configuration& w, const NetworkGraph& g, int i);

/// One synchronous consensus step: every node retracts along -epsilon times
/// its potential gradient, all gradients evaluated at the old configuration.
Configuration consensus_step(const Configuration& w, const NetworkGraph& g,
                             const ConsensusParams& params);

/// True when the unweighted potential is within the convexity safeguard.
bool in_s_conv(const Configuration& w, const NetworkGraph& g,
               const ConsensusParams& params);

/// Sampled second-difference bound on the Hessian of the potential along
/// geodesics, times a 1.2 safety factor. Used to pick epsilon = 1/mu_hat.
double estimate_mu_max(const Configuration& w, const NetworkGraph& g,
                       int samples, RngStream& stream);

// Stacked-tangent helpers shared by the estimator, gradient checks and tests.
double config_tangent_norm(const std::vector<Matrix>& tangents);
Configuration config_exp(const Configuration& w,
                         const std::vector<Matrix>& tangents, double t);
std::vector<Matrix> random_config_tangent(const Configuration& w, double sigma,
                                          RngStream& stream);

double max_pair_dist_sq(const Configuration& w);

/// Central-difference check of grad_potential along random stacked unit
/// directions; returns the worst relative error.
double fd_potential_check(const Configuration& w, const NetworkGraph& g,
                          int directions, double t, RngStream& stream);

}  // namespace mcons
