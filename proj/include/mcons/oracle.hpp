#pragma once

#include <functional>
#include <vector>

#include "mcons/manifold.hpp"

namespace mcons {

/// Independent ground-truth solution with its defining residual.
struct OracleSolution {
  enum class Kind { Eigvec, Subspace, FrechetMean };
  Kind kind = Kind::Eigvec;
  ManifoldPoint value;
  double residual = 0.0;
  Vector eigenvalues;  // leading eigenvalues where applicable
};

/// Unit eigenvector of the largest eigenvalue via shifted power iteration
/// (shift ||A||_1 guarantees dominance), deflation for the runner-up.
/// Sign fixed so the first nonzero component is positive.
OracleSolution leading_eigenvector(const Matrix& a);

/// Orthonormal basis of the dominant r-dimensional invariant subspace,
/// returned as a Grassmann point. Requires lambda_r - lambda_{r+1} > 1e-10.
OracleSolution top_subspace(const Matrix& a, int r);

/// Karcher mean by fixed-point iteration x <- exp_x(mean of logs).
OracleSolution frechet_mean(const ManifoldDescriptor& d,
                            const std::vector<Matrix>& points, double tol);

/// Scalar field on a manifold with its analytic gradient.
struct ScalarField {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> grad;  // Riemannian gradient
};

struct FlowTrajectory {
  std::vector<double> times;
  std::vector<Matrix> points;
  std::vector<double> cost_values;
  double terminal_grad_norm = 0.0;
};

/// Explicit geodesic-Euler integration of dw/dt = -grad f(w).
FlowTrajectory flow_integrate(const ManifoldDescriptor& d,
                              const ScalarField& f, const Matrix& x0,
                              double dt, double horizon);

/// Discrete iterates of w <- retract(w, -a grad f(w)) tagged with t_n = n a,
/// run until the cumulative time passes the horizon.
struct IteratePath {
  std::vector<double> times;
  std::vector<Matrix> points;
};
IteratePath constant_step_iterates(const ManifoldDescriptor& d,
                                   const ScalarField& f, const Matrix& x0,
                                   double step, double horizon);

/// Sup over [t0, t0+T] of the distance between the geodesic interpolation of
/// the iterates and the gradient flow started at the first iterate.
double compare_to_flow(const ManifoldDescriptor& d, const IteratePath& path,
                       const ScalarField& f, double horizon);

/// Max over random unit tangent directions of the relative error between the
/// central difference of f and <grad f, v>.
double fd_gradient_check(const ManifoldDescriptor& d, const ScalarField& f,
                         const Matrix& x, int directions, double t,
                         RngStream& stream);

}  // namespace mcons
