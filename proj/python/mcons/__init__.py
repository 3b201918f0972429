"""Consensual distributed optimization on Riemannian manifolds.

Thin wrapper around the C++ core. The functional API mirrors the C++
library: manifolds are value descriptors, points and tangents are numpy
arrays, and the simulator consumes explicit seeds everywhere.
"""

from ._core import (  # noqa: F401
    ConsensusMode,
    ManifoldDescriptor,
    McError,
    NetworkGraph,
    NodeCost,
    RestartPolicy,
    RunConfig,
    RunResult,
    consensus_step,
    delta,
    distance,
    eigvec_cost,
    estimate_mu_max,
    euclidean,
    exp_map,
    frechet_mean,
    grad_potential,
    grassmann,
    in_s_conv,
    init_spread,
    leading_eigenvector,
    log_map,
    matrix_power,
    merged_cost,
    metropolis_weights,
    n_k_schedule,
    partition_dataset,
    pca_cost,
    potential,
    potential_unweighted,
    project_tangent,
    quadratic_cost,
    random_connected_graph,
    random_point,
    random_tangent,
    retract,
    run,
    sphere,
    synthetic_dataset,
    top_subspace,
    transport,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
