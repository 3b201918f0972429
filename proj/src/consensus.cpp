#include "mcons/consensus.hpp"

#include <cmath>
#include <limits>

#include "mcons/parallel.hpp"

namespace mcons {

namespace {

double edge_sum(const Configuration& w, const NetworkGraph& g, bool weighted) {
  double sum = 0.0;
  for (const auto& [i, j] : g.edges) {
    if (!mf::within_injectivity(w.descriptor, w.points[i], w.points[j])) {
      throw GeometryError("configuration not locally comparable");
    }
    const double d = mf::distance(w.descriptor, w.points[i], w.points[j]);
    sum += (weighted ? g.weight(i, j) : 1.0) * d * d;
  }
  return 0.5 * sum;
}

}  // namespace

ConsensusParams ConsensusParams::make(const ManifoldDescriptor& d,
                                      const NetworkGraph& g, double epsilon,
                                      double mu_max) {
  if (mu_max <= 0.0) throw PreconditionError("mu_max must be positive");
  if (epsilon <= 0.0 || epsilon >= 2.0 / mu_max) {
    throw PreconditionError("epsilon must lie in (0, 2/mu_max)");
  }
  ConsensusParams p;
  p.epsilon = epsilon;
  p.mu_max = mu_max;
  p.r_c = d.convexity_radius;
  p.g_diam = g.diameter;
  p.s_conv_threshold =
      (std::isinf(p.r_c) || g.diameter == 0)
          ? std::numeric_limits<double>::infinity()
          : p.r_c * p.r_c / (2.0 * static_cast<double>(g.diameter));
  return p;
}

double potential(const Configuration& w, const NetworkGraph& g) {
  return edge_sum(w, g, /*weighted=*/true);
}

double potential_unweighted(const Configuration& w, const NetworkGraph& g) {
  return edge_sum(w, g, /*weighted=*/false);
}

Matrix grad_potential(const Configuration& w, const NetworkGraph& g, int i) {
  Matrix grad = Matrix::Zero(w.descriptor.ambient_rows, w.descriptor.cols);
  for (int j = 0; j < g.num_nodes; ++j) {
    if (j == i || g.weight(i, j) == 0.0) continue;
    if (!mf::within_injectivity(w.descriptor, w.points[i], w.points[j])) {
      throw GeometryError("configuration not locally comparable");
    }
    grad -= g.weight(i, j) * mf::log(w.descriptor, w.points[i], w.points[j]);
  }
  return grad;
}

Configuration consensus_step(const Configuration& w, const NetworkGraph& g,
                             const ConsensusParams& params) {
  Configuration v;
  v.descriptor = w.descriptor;
  v.points.resize(w.points.size());
  std::exception_ptr failure;
  parallel_for(w.size(), [&](int i) {
    try {
      const Matrix grad = grad_potential(w, g, i);
      v.points[i] =
          mf::retract(w.descriptor, w.points[i], -params.epsilon * grad);
    } catch (...) {
      failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return v;
}

bool in_s_conv(const Configuration& w, const NetworkGraph& g,
               const ConsensusParams& params) {
  if (std::isinf(params.s_conv_threshold)) return true;
  return potential_unweighted(w, g) <= params.s_conv_threshold;
}

double config_tangent_norm(const std::vector<Matrix>& tangents) {
  double sq = 0.0;
  for (const auto& t : tangents) sq += t.squaredNorm();
  return std::sqrt(sq);
}

Configuration config_exp(const Configuration& w,
                         const std::vector<Matrix>& tangents, double t) {
  Configuration out;
  out.descriptor = w.descriptor;
  out.points.resize(w.points.size());
  for (int i = 0; i < w.size(); ++i) {
    out.points[i] = mf::exp(w.descriptor, w.points[i], t * tangents[i]);
  }
  return out;
}

std::vector<Matrix> random_config_tangent(const Configuration& w, double sigma,
                                          RngStream& stream) {
  std::vector<Matrix> tangents(w.points.size());
  for (int i = 0; i < w.size(); ++i) {
    tangents[i] =
        mf::random_tangent(w.descriptor, w.points[i], sigma, stream);
  }
  return tangents;
}

double estimate_mu_max(const Configuration& w, const NetworkGraph& g,
                       int samples, RngStream& stream) {
  if (samples < 1) throw PreconditionError("samples must be >= 1");
  const double t = 1e-3;
  double max_curv = 0.0;
  for (int s = 0; s < samples; ++s) {
    // Alternate between the configuration itself and a nearby perturbation,
    // so the bound covers the neighborhood the iterates move through.
    Configuration base = w;
    if (s % 2 == 1) {
      const auto jitter = random_config_tangent(w, 0.05, stream);
      base = config_exp(w, jitter, 1.0);
    }
    auto dir = random_config_tangent(base, 1.0, stream);
    const double n = config_tangent_norm(dir);
    if (n == 0.0) continue;
    for (auto& d : dir) d /= n;
    const double phi0 = potential(base, g);
    const double phi_plus = potential(config_exp(base, dir, t), g);
    const double phi_minus = potential(config_exp(base, dir, -t), g);
    const double second = (phi_plus - 2.0 * phi0 + phi_minus) / (t * t);
    max_curv = std::max(max_curv, second);
  }
  if (max_curv <= 0.0) {
    // Flat direction sample set (e.g. already at consensus on a flat space);
    // fall back to a crude worst case so epsilon stays finite.
    max_curv = 1.0;
  }
  return 1.2 * max_curv;
}

double fd_potential_check(const Configuration& w, const NetworkGraph& g,
                          int directions, double t, RngStream& stream) {
  std::vector<Matrix> grads(w.points.size());
  for (int i = 0; i < w.size(); ++i) grads[i] = grad_potential(w, g, i);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    auto dir = random_config_tangent(w, 1.0, stream);
    const double n = config_tangent_norm(dir);
    if (n == 0.0) continue;
    for (auto& d : dir) d /= n;
    const double fd = (potential(config_exp(w, dir, t), g) -
                       potential(config_exp(w, dir, -t), g)) /
                      (2.0 * t);
    double ip = 0.0;
    for (int i = 0; i < w.size(); ++i) ip += mf::inner(grads[i], dir[i]);
    worst = std::max(worst, std::abs(fd - ip) / std::max(std::abs(ip), 1e-8));
  }
  return worst;
}

double max_pair_dist_sq(const Configuration& w) {
  double best = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    for (int j = i + 1; j < w.size(); ++j) {
      const double d = mf::distance(w.descriptor, w.points[i], w.points[j]);
      best = std::max(best, d * d);
    }
  }
  return best;
}

}  // namespace mcons
