#include "mcons/engine.hpp"

#include <cmath>

#include "mcons/parallel.hpp"

namespace mcons {

void StepSchedule::validate() const {
  if (a0 <= 0.0) throw PreconditionError("step schedule needs a0 > 0");
  if (k0 < 0) throw PreconditionError("step schedule needs k0 >= 0");
  if (p <= 0.5 || p > 1.0) {
    throw PreconditionError("step exponent p must lie in (0.5, 1]");
  }
}

void RunConfig::validate() const {
  schedule.validate();
  if (epsilon && *epsilon <= 0.0) {
    throw PreconditionError("epsilon must be positive");
  }
  if (delta0 <= 0.0) throw PreconditionError("delta0 must be positive");
  if (n_cap < 1) throw PreconditionError("n_cap must be >= 1");
  if (noise_sigma < 0.0) throw PreconditionError("noise_sigma must be >= 0");
  if (max_iters < 1) throw PreconditionError("max_iters must be >= 1");
  if (mode == ConsensusMode::Tracking && noise_sigma > 0.0) {
    throw PreconditionError(
        "tracking mode requires exact gradients (noise_sigma = 0)");
  }
  if (mode == ConsensusMode::Tracking && minibatch) {
    throw PreconditionError(
        "tracking mode requires exact gradients (no minibatch)");
  }
}

Problem Problem::make(const ManifoldDescriptor& d, NetworkGraph g,
                      std::vector<NodeCost> costs,
                      std::optional<Matrix> oracle) {
  if (static_cast<int>(costs.size()) != g.num_nodes) {
    throw PreconditionError("need one cost per node");
  }
  Problem p;
  p.descriptor = d;
  p.graph = std::move(g);
  p.global_cost = NodeCost::merged(costs);
  p.costs = std::move(costs);
  p.oracle_point = std::move(oracle);
  return p;
}

int n_k_schedule(double gamma, int k, double delta0, int n_cap) {
  if (gamma <= 0.0) return 1;
  const double target = delta0 / static_cast<double>(k + 1);
  if (gamma <= target) return 1;
  const int n =
      static_cast<int>(std::ceil(std::log(target) / std::log(gamma) - 1e-12));
  return std::min(std::max(1, n), n_cap);
}

std::vector<Matrix> gradient_consensus_power(const Configuration& v,
                                             const std::vector<Matrix>& grads,
                                             const NetworkGraph& g, int n_k) {
  const Matrix qn = matrix_power(g, n_k);
  const int n = g.num_nodes;
  std::vector<Matrix> xi(n);
  std::exception_ptr failure;
  parallel_for(n, [&](int i) {
    try {
      Matrix acc =
          Matrix::Zero(v.descriptor.ambient_rows, v.descriptor.cols);
      for (int j = 0; j < n; ++j) {
        const double w = qn(i, j);
        if (w == 0.0) continue;
        if (j == i) {
          acc += w * grads[j];
        } else {
          acc += w * mf::transport(v.descriptor, v.points[j], v.points[i],
                                   grads[j]);
        }
      }
      xi[i] = std::move(acc);
    } catch (...) {
      failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return xi;
}

void gradient_consensus_tracking(const NetworkGraph& g_net,
                                 const Configuration& v_new,
                                 const std::vector<Matrix>& grads_new,
                                 TrackerState& state) {
  const int n = g_net.num_nodes;
  const auto& d = v_new.descriptor;
  std::vector<Matrix> g_next(n);
  std::exception_ptr failure;
  parallel_for(n, [&](int i) {
    try {
      Matrix acc = Matrix::Zero(d.ambient_rows, d.cols);
      for (int j = 0; j < n; ++j) {
        const double w = g_net.weight(i, j);
        if (w == 0.0) continue;
        acc += w * mf::transport(d, state.v_prev.points[j], v_new.points[i],
                                 state.g[j]);
      }
      acc += grads_new[i];
      acc -= mf::transport(d, state.v_prev.points[i], v_new.points[i],
                           state.grad_prev[i]);
      g_next[i] = std::move(acc);
    } catch (...) {
      failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  state.g = std::move(g_next);
  state.grad_prev = grads_new;
  state.v_prev = v_new;
}

Configuration descent_step(const Configuration& v,
                           const std::vector<Matrix>& xi, double a_k) {
  Configuration w;
  w.descriptor = v.descriptor;
  w.points.resize(v.points.size());
  parallel_for(v.size(), [&](int i) {
    w.points[i] = mf::retract(v.descriptor, v.points[i], -a_k * xi[i]);
  });
  return w;
}

double dist_to_oracle(const ManifoldDescriptor& d, const Matrix& x,
                      const Matrix& oracle) {
  if (d.kind == ManifoldKind::Sphere) {
    const double c = std::abs(x.col(0).dot(oracle.col(0)));
    return std::acos(std::clamp(c, 0.0, 1.0));
  }
  return mf::distance(d, x, oracle);
}

Configuration init_spread(const ManifoldDescriptor& d, const Matrix& center,
                          int n_agents, double sigma, RngStream& stream) {
  if (n_agents < 1) throw PreconditionError("need at least one agent");
  Configuration w;
  w.descriptor = d;
  w.points.reserve(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const Matrix v = mf::random_tangent(d, center, sigma, stream);
    w.points.push_back(mf::exp(d, center, v));
  }
  return w;
}

namespace {

std::vector<double> node_costs(const Problem& problem, const Configuration& w) {
  const int n = w.size();
  std::vector<double> costs(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_for(n, [&](int i) {
    costs[i] =
        inv_n * problem.global_cost.value(problem.descriptor, w.points[i]);
  });
  return costs;
}

struct DeviationSample {
  double deviation = 0.0;
  double bound = 0.0;
};

/// Power mode: deviation of the consensused directions from the exact
/// transported average, with the mixing-error bound N delta_k max||grad||.
DeviationSample measure_power_deviation(const Configuration& v,
                                        const std::vector<Matrix>& grads,
                                        const std::vector<Matrix>& xi,
                                        double delta_k) {
  const int n = v.size();
  double max_grad = 0.0;
  for (const auto& g : grads) max_grad = std::max(max_grad, g.norm());
  DeviationSample out;
  out.bound = static_cast<double>(n) * delta_k * max_grad;
  for (int i = 0; i < n; ++i) {
    Matrix avg = Matrix::Zero(v.descriptor.ambient_rows, v.descriptor.cols);
    for (int j = 0; j < n; ++j) {
      avg += (j == i) ? grads[j]
                      : mf::transport(v.descriptor, v.points[j], v.points[i],
                                      grads[j]);
    }
    avg /= static_cast<double>(n);
    out.deviation = std::max(out.deviation, (xi[i] - avg).norm());
  }
  return out;
}

/// Tracking mode: deviation of the transported tracker average from the
/// transported gradient average. Exact on flat spaces; on curved ones the
/// holonomy of the transports sets the scale, so the bound is scaled by the
/// squared configuration spread.
DeviationSample measure_tracking_deviation(const Configuration& v,
                                           const std::vector<Matrix>& grads,
                                           const std::vector<Matrix>& trackers) {
  const int n = v.size();
  double max_grad = 0.0;
  for (const auto& g : grads) max_grad = std::max(max_grad, g.norm());
  const double spread_sq = max_pair_dist_sq(v);
  DeviationSample out;
  out.bound = 10.0 * spread_sq * max_grad;
  for (int i = 0; i < n; ++i) {
    Matrix avg = Matrix::Zero(v.descriptor.ambient_rows, v.descriptor.cols);
    for (int j = 0; j < n; ++j) {
      const Matrix diff = trackers[j] - grads[j];
      avg += (j == i) ? diff
                      : mf::transport(v.descriptor, v.points[j], v.points[i],
                                      diff);
    }
    avg /= static_cast<double>(n);
    out.deviation = std::max(out.deviation, avg.norm());
  }
  return out;
}

}  // namespace

RunResult run(const Problem& problem, const RunConfig& cfg,
              const Configuration& init) {
  cfg.validate();
  const auto& d = problem.descriptor;
  const NetworkGraph& net = problem.graph;
  const int n = net.num_nodes;
  if (init.size() != n) {
    throw PreconditionError("initial configuration size mismatch");
  }
  if (static_cast<int>(problem.costs.size()) != n) {
    throw PreconditionError("need one cost per node");
  }

  RunResult result;
  result.records.reserve(cfg.max_iters);

  // Hessian-bound estimate drives the automatic epsilon and the safeguard
  // parameters; an explicit epsilon is honored as given.
  RngStream mu_stream(cfg.master_seed, 0x6D75ULL);
  result.mu_hat = estimate_mu_max(init, net, 128, mu_stream);
  result.epsilon_used = cfg.epsilon ? *cfg.epsilon : 1.0 / result.mu_hat;

  ConsensusParams params;
  params.epsilon = result.epsilon_used;
  params.mu_max = result.mu_hat;
  params.r_c = d.convexity_radius;
  params.g_diam = net.diameter;
  params.s_conv_threshold =
      (std::isinf(d.convexity_radius) || net.diameter == 0)
          ? std::numeric_limits<double>::infinity()
          : d.convexity_radius * d.convexity_radius /
                (2.0 * static_cast<double>(net.diameter));

  NoiseModel noise(cfg.noise_sigma, n, cfg.master_seed);
  std::vector<RngStream> batch_streams;
  if (cfg.minibatch) {
    batch_streams.reserve(n);
    for (int i = 0; i < n; ++i) {
      batch_streams.emplace_back(cfg.master_seed, 0x4D42ULL + i);
    }
  }

  Configuration w = init;
  result.init_in_s_conv = in_s_conv(w, net, params);
  if (!result.init_in_s_conv) result.s_conv_violated = true;

  TrackerState tracker;
  bool tracker_ready = false;
  const double delta_one = delta(net, 1);

  // Powers of Q are reused across iterations with the same round count.
  int cached_n_k = -1;
  Matrix cached_qn;
  double cached_delta = 0.0;

  for (int k = 0; k < cfg.max_iters; ++k) {
    try {
      if (k > 0 && !in_s_conv(w, net, params)) {
        result.s_conv_violated = true;
        if (cfg.restart == RestartPolicy::Halt) {
          result.abort_reason = "halted on convexity-safeguard violation";
          break;
        }
        if (cfg.restart == RestartPolicy::ResetToBest) {
          const auto costs = node_costs(problem, w);
          int best = 0;
          for (int i = 1; i < n; ++i) {
            if (costs[i] < costs[best]) best = i;
          }
          const Matrix anchor = w.points[best];
          for (auto& p : w.points) p = anchor;
          ++result.restarts;
          // Trackers reference pre-reset geometry; restart them too.
          tracker_ready = false;
        }
      }

      // S1: Riemannian consensus step.
      const Configuration v = consensus_step(w, net, params);

      // S2: noisy gradient draws, then gradient consensus.
      std::vector<Matrix> grads(n);
      {
        std::exception_ptr failure;
        parallel_for(n, [&](int j) {
          try {
            Matrix g =
                cfg.minibatch
                    ? problem.costs[j].minibatch_grad(
                          d, v.points[j],
                          batch_streams[j].uniform_int(
                              problem.costs[j].sample_count()))
                    : problem.costs[j].riemannian_grad(d, v.points[j]);
            if (noise.sigma > 0.0) {
              g += mf::random_tangent(d, v.points[j], noise.sigma,
                                      noise.streams[j]);
            }
            grads[j] = std::move(g);
          } catch (...) {
            failure = std::current_exception();
          }
        });
        if (failure) std::rethrow_exception(failure);
      }

      int n_k = 1;
      double delta_k = delta_one;
      std::vector<Matrix> xi;
      if (cfg.mode == ConsensusMode::Power) {
        n_k = n_k_schedule(net.spectral_gap_norm, k, cfg.delta0, cfg.n_cap);
        if (n_k != cached_n_k) {
          cached_qn = matrix_power(net, n_k);
          cached_delta =
              (cached_qn.array() - 1.0 / static_cast<double>(n)).abs().maxCoeff();
          cached_n_k = n_k;
        }
        delta_k = cached_delta;
        xi.resize(n);
        std::exception_ptr failure;
        parallel_for(n, [&](int i) {
          try {
            Matrix acc = Matrix::Zero(d.ambient_rows, d.cols);
            for (int j = 0; j < n; ++j) {
              const double qw = cached_qn(i, j);
              if (qw == 0.0) continue;
              acc += (j == i) ? qw * grads[j]
                              : qw * mf::transport(d, v.points[j], v.points[i],
                                                   grads[j]);
            }
            xi[i] = std::move(acc);
          } catch (...) {
            failure = std::current_exception();
          }
        });
        if (failure) std::rethrow_exception(failure);
        result.comm_rounds += n_k;
      } else {
        if (!tracker_ready) {
          tracker.v_prev = v;
          tracker.g = grads;
          tracker.grad_prev = grads;
          tracker_ready = true;
        } else {
          gradient_consensus_tracking(net, v, grads, tracker);
        }
        xi = tracker.g;
        result.comm_rounds += 1;
      }

      if (cfg.track_deviation) {
        const auto sample =
            cfg.mode == ConsensusMode::Power
                ? measure_power_deviation(v, grads, xi, delta_k)
                : measure_tracking_deviation(v, grads, tracker.g);
        result.deviation.push_back(sample.deviation);
        result.deviation_bound.push_back(sample.bound);
      }

      // S3: gradient descent step.
      const double a_k = cfg.schedule.at(k);
      w = descent_step(v, xi, a_k);

      IterationRecord rec;
      rec.k = k;
      rec.phi = potential(w, net);
      rec.max_pair_dist_sq = max_pair_dist_sq(w);
      rec.cost_values = node_costs(problem, w);
      rec.mean_cost = 0.0;
      rec.min_cost = rec.cost_values.front();
      rec.max_cost = rec.cost_values.front();
      for (const double c : rec.cost_values) {
        rec.mean_cost += c;
        rec.min_cost = std::min(rec.min_cost, c);
        rec.max_cost = std::max(rec.max_cost, c);
      }
      rec.mean_cost /= static_cast<double>(n);
      if (problem.oracle_point) {
        double worst = 0.0;
        for (const auto& p : w.points) {
          worst = std::max(worst, dist_to_oracle(d, p, *problem.oracle_point));
        }
        rec.dist_to_oracle = worst;
      }
      rec.in_s_conv = in_s_conv(w, net, params);
      rec.n_k = n_k;
      rec.a_k = a_k;
      rec.delta_k = delta_k;
      result.records.push_back(std::move(rec));
      if (cfg.keep_trajectory) result.trajectory.push_back(w);
    } catch (const Error& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
  }

  result.final_config = std::move(w);
  return result;
}

}  // namespace mcons
