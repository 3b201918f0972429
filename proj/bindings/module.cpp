#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcons/config.hpp"
#include "mcons/engine.hpp"
#include "mcons/oracle.hpp"

namespace py = pybind11;
using namespace mcons;

namespace {

Configuration make_config(const ManifoldDescriptor& d,
                          const std::vector<Matrix>& points) {
  return Configuration{d, points};
}

template <typename T, typename F>
std::vector<T> collect(const std::vector<IterationRecord>& records, F field) {
  std::vector<T> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(field(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "consensual distributed optimization on Riemannian manifolds";

  py::register_exception<Error>(m, "McError", PyExc_RuntimeError);

  py::class_<ManifoldDescriptor>(m, "ManifoldDescriptor")
      .def_readonly("ambient_rows", &ManifoldDescriptor::ambient_rows)
      .def_readonly("cols", &ManifoldDescriptor::cols)
      .def_readonly("convexity_radius", &ManifoldDescriptor::convexity_radius)
      .def_readonly("injectivity_radius",
                    &ManifoldDescriptor::injectivity_radius)
      .def_property_readonly("kind", &ManifoldDescriptor::kind_name)
      .def("__repr__", [](const ManifoldDescriptor& d) {
        return std::string("ManifoldDescriptor(") + d.kind_name() + ", " +
               std::to_string(d.ambient_rows) + "x" + std::to_string(d.cols) +
               ")";
      });

  m.def("sphere", &ManifoldDescriptor::sphere, py::arg("ambient_rows"));
  m.def("grassmann", &ManifoldDescriptor::grassmann, py::arg("ambient_rows"),
        py::arg("cols"));
  m.def("euclidean", &ManifoldDescriptor::euclidean, py::arg("ambient_rows"),
        py::arg("cols") = 1);

  // manifold operations on plain arrays
  m.def("distance", &mf::distance, py::arg("descriptor"), py::arg("x"),
        py::arg("y"));
  m.def("exp_map", &mf::exp, py::arg("descriptor"), py::arg("x"),
        py::arg("v"));
  m.def("log_map", &mf::log, py::arg("descriptor"), py::arg("x"),
        py::arg("y"));
  m.def("retract", &mf::retract, py::arg("descriptor"), py::arg("x"),
        py::arg("v"));
  m.def("transport", &mf::transport, py::arg("descriptor"), py::arg("x"),
        py::arg("y"), py::arg("v"));
  m.def("project_tangent", &mf::project, py::arg("descriptor"), py::arg("x"),
        py::arg("ambient"));
  m.def(
      "random_point",
      [](const ManifoldDescriptor& d, std::uint64_t seed) {
        RngStream stream(seed, 0);
        return mf::random_point(d, stream);
      },
      py::arg("descriptor"), py::arg("seed"));
  m.def(
      "random_tangent",
      [](const ManifoldDescriptor& d, const Matrix& x, double sigma,
         std::uint64_t seed) {
        RngStream stream(seed, 1);
        return mf::random_tangent(d, x, sigma, stream);
      },
      py::arg("descriptor"), py::arg("x"), py::arg("sigma"), py::arg("seed"));

  py::class_<NetworkGraph>(m, "NetworkGraph")
      .def_readonly("num_nodes", &NetworkGraph::num_nodes)
      .def_readonly("weights", &NetworkGraph::weights)
      .def_readonly("edges", &NetworkGraph::edges)
      .def_readonly("diameter", &NetworkGraph::diameter)
      .def_readonly("spectral_gap_norm", &NetworkGraph::spectral_gap_norm)
      .def_readonly("lazy_mixed", &NetworkGraph::lazy_mixed)
      .def("__repr__", [](const NetworkGraph& g) {
        return "NetworkGraph(N=" + std::to_string(g.num_nodes) +
               ", edges=" + std::to_string(g.edges.size()) +
               ", gamma=" + std::to_string(g.spectral_gap_norm) + ")";
      });

  m.def("metropolis_weights", &metropolis_weights, py::arg("adjacency"));
  m.def("random_connected_graph", &random_connected_graph, py::arg("n"),
        py::arg("edge_prob"), py::arg("seed"));
  m.def("matrix_power", &matrix_power, py::arg("graph"), py::arg("n"));
  m.def("delta", &delta, py::arg("graph"), py::arg("n"));

  // consensus potential
  m.def(
      "potential",
      [](const ManifoldDescriptor& d, const std::vector<Matrix>& points,
         const NetworkGraph& g) { return potential(make_config(d, points), g); },
      py::arg("descriptor"), py::arg("points"), py::arg("graph"));
  m.def(
      "potential_unweighted",
      [](const ManifoldDescriptor& d, const std::vector<Matrix>& points,
         const NetworkGraph& g) {
        return potential_unweighted(make_config(d, points), g);
      },
      py::arg("descriptor"), py::arg("points"), py::arg("graph"));
  m.def(
      "grad_potential",
      [](const ManifoldDescriptor& d, const std::vector<Matrix>& points,
         const NetworkGraph& g, int i) {
        return grad_potential(make_config(d, points), g, i);
      },
      py::arg("descriptor"), py::arg("points"), py::arg("graph"),
      py::arg("node"));
  m.def(
      "consensus_step",
      [](const ManifoldDescriptor& d, const std::vector<Matrix>& points,
         const NetworkGraph& g, double epsilon, double mu_max) {
        const auto params = ConsensusParams::make(d, g, epsilon, mu_max);
        return consensus_step(make_config(d, points), g, params).points;
      },
      py::arg("descriptor"), py::arg("points"), py::arg("graph"),
      py::arg("epsilon"), py::arg("mu_max") = 1.0);
  m.def(
      "in_s_conv",
      [](const ManifoldDescriptor& d, const std::vector<Matrix>& points,
         const NetworkGraph& g) {
        const auto params = ConsensusParams::make(d, g, 0.5, 1.0);
        return in_s_conv(make_config(d, points), g, params);
      },
      py::arg("descriptor"), py::arg("points"), py::arg("graph"));
  m.def(
      "estimate_mu_max",
      [](const ManifoldDescriptor& d, const std::vector<Matrix>& points,
         const NetworkGraph& g, int samples, std::uint64_t seed) {
        RngStream stream(seed, 2);
        return estimate_mu_max(make_config(d, points), g, samples, stream);
      },
      py::arg("descriptor"), py::arg("points"), py::arg("graph"),
      py::arg("samples") = 200, py::arg("seed") = 0);

  // costs
  py::class_<NodeCost>(m, "NodeCost")
      .def_property_readonly("sample_count", &NodeCost::sample_count)
      .def_property_readonly("gram", &NodeCost::gram)
      .def("value", &NodeCost::value, py::arg("descriptor"), py::arg("x"))
      .def("riemannian_grad", &NodeCost::riemannian_grad, py::arg("descriptor"),
           py::arg("x"));

  m.def("eigvec_cost", &NodeCost::eigvec, py::arg("samples"));
  m.def("pca_cost", &NodeCost::pca, py::arg("samples"));
  m.def("quadratic_cost", &NodeCost::quadratic, py::arg("matrix"),
        py::arg("offset"));
  m.def("merged_cost", &NodeCost::merged, py::arg("costs"));
  m.def(
      "partition_dataset",
      [](const Matrix& samples, int nodes, std::uint64_t seed,
         const std::string& kind) {
        const CostKind k = kind == "eigvec" ? CostKind::Eigvec : CostKind::Pca;
        return partition_dataset(samples, nodes, seed, k);
      },
      py::arg("samples"), py::arg("num_nodes"), py::arg("seed"),
      py::arg("kind") = "eigvec");
  m.def("synthetic_dataset", &synthetic_dataset, py::arg("dims"),
        py::arg("num_samples"), py::arg("spectrum_decay"), py::arg("seed"));

  // oracles
  m.def(
      "leading_eigenvector",
      [](const Matrix& a) {
        const auto s = leading_eigenvector(a);
        return py::make_tuple(s.value.coords, s.residual, s.eigenvalues);
      },
      py::arg("matrix"));
  m.def(
      "top_subspace",
      [](const Matrix& a, int r) {
        const auto s = top_subspace(a, r);
        return py::make_tuple(s.value.coords, s.residual, s.eigenvalues);
      },
      py::arg("matrix"), py::arg("r"));
  m.def(
      "frechet_mean",
      [](const ManifoldDescriptor& d, const std::vector<Matrix>& points,
         double tol) {
        const auto s = frechet_mean(d, points, tol);
        return py::make_tuple(s.value.coords, s.residual);
      },
      py::arg("descriptor"), py::arg("points"), py::arg("tol") = 1e-10);

  // engine
  py::enum_<ConsensusMode>(m, "ConsensusMode")
      .value("power", ConsensusMode::Power)
      .value("tracking", ConsensusMode::Tracking);
  py::enum_<RestartPolicy>(m, "RestartPolicy")
      .value("halt", RestartPolicy::Halt)
      .value("reset_to_best", RestartPolicy::ResetToBest)
      .value("ignore", RestartPolicy::Ignore);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init([](py::object epsilon, double a0, int k0, double p,
                       ConsensusMode mode, double delta0, int n_cap,
                       double noise_sigma, int max_iters, RestartPolicy restart,
                       std::uint64_t master_seed, bool minibatch,
                       bool track_deviation) {
             RunConfig cfg;
             if (!epsilon.is_none()) cfg.epsilon = epsilon.cast<double>();
             cfg.schedule = {a0, k0, p};
             cfg.mode = mode;
             cfg.delta0 = delta0;
             cfg.n_cap = n_cap;
             cfg.noise_sigma = noise_sigma;
             cfg.max_iters = max_iters;
             cfg.restart = restart;
             cfg.master_seed = master_seed;
             cfg.minibatch = minibatch;
             cfg.track_deviation = track_deviation;
             cfg.validate();
             return cfg;
           }),
           py::arg("epsilon") = py::none(), py::arg("a0") = 1.0,
           py::arg("k0") = 0, py::arg("p") = 1.0,
           py::arg("mode") = ConsensusMode::Power, py::arg("delta0") = 0.1,
           py::arg("n_cap") = 200, py::arg("noise_sigma") = 0.0,
           py::arg("max_iters") = 1000,
           py::arg("restart") = RestartPolicy::ResetToBest,
           py::arg("master_seed") = 0, py::arg("minibatch") = false,
           py::arg("track_deviation") = false);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("restarts", &RunResult::restarts)
      .def_readonly("init_in_s_conv", &RunResult::init_in_s_conv)
      .def_readonly("s_conv_violated", &RunResult::s_conv_violated)
      .def_readonly("aborted", &RunResult::aborted)
      .def_readonly("abort_reason", &RunResult::abort_reason)
      .def_readonly("epsilon_used", &RunResult::epsilon_used)
      .def_readonly("mu_hat", &RunResult::mu_hat)
      .def_readonly("comm_rounds", &RunResult::comm_rounds)
      .def_readonly("deviation", &RunResult::deviation)
      .def_readonly("deviation_bound", &RunResult::deviation_bound)
      .def_property_readonly(
          "final_points",
          [](const RunResult& r) { return r.final_config.points; })
      .def_property_readonly("phi",
                             [](const RunResult& r) {
                               return collect<double>(
                                   r.records,
                                   [](const auto& x) { return x.phi; });
                             })
      .def_property_readonly("max_pair_dist_sq",
                             [](const RunResult& r) {
                               return collect<double>(
                                   r.records, [](const auto& x) {
                                     return x.max_pair_dist_sq;
                                   });
                             })
      .def_property_readonly("mean_cost",
                             [](const RunResult& r) {
                               return collect<double>(
                                   r.records,
                                   [](const auto& x) { return x.mean_cost; });
                             })
      .def_property_readonly("dist_to_oracle",
                             [](const RunResult& r) {
                               return collect<double>(
                                   r.records, [](const auto& x) {
                                     return x.dist_to_oracle;
                                   });
                             })
      .def_property_readonly("a_k",
                             [](const RunResult& r) {
                               return collect<double>(
                                   r.records,
                                   [](const auto& x) { return x.a_k; });
                             })
      .def_property_readonly("n_k",
                             [](const RunResult& r) {
                               return collect<int>(
                                   r.records,
                                   [](const auto& x) { return x.n_k; });
                             })
      .def_property_readonly("delta_k", [](const RunResult& r) {
        return collect<double>(r.records,
                               [](const auto& x) { return x.delta_k; });
      });

  m.def(
      "init_spread",
      [](const ManifoldDescriptor& d, const Matrix& center, int n_agents,
         double sigma, std::uint64_t seed) {
        RngStream stream(seed, 0);
        return init_spread(d, center, n_agents, sigma, stream).points;
      },
      py::arg("descriptor"), py::arg("center"), py::arg("n_agents"),
      py::arg("sigma"), py::arg("seed"));

  m.def(
      "run",
      [](const ManifoldDescriptor& d, const NetworkGraph& g,
         const std::vector<NodeCost>& costs,
         const std::vector<Matrix>& init_points, const RunConfig& cfg,
         py::object oracle) {
        auto problem = Problem::make(d, g, costs);
        if (!oracle.is_none()) {
          problem.oracle_point = oracle.cast<Matrix>();
        }
        return run(problem, cfg, make_config(d, init_points));
      },
      py::arg("descriptor"), py::arg("graph"), py::arg("costs"),
      py::arg("init_points"), py::arg("config"), py::arg("oracle") = py::none());

  m.def("n_k_schedule", &n_k_schedule, py::arg("gamma"), py::arg("k"),
        py::arg("delta0"), py::arg("n_cap"));
}
