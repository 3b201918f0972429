#include "mcons/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace mcons {

namespace {

struct EigenPair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;
};

void check_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) throw PreconditionError("matrix must be square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + a.norm())) {
    throw PreconditionError("matrix must be symmetric");
  }
}

void fix_sign(Vector& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

/// Power iteration on a + shift I with previously found pairs deflated away.
EigenPair dominant_pair(const Matrix& a, double shift,
                        const std::vector<EigenPair>& deflated,
                        double target_residual) {
  const int n = static_cast<int>(a.rows());
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  // Deterministic tie-breaking start; perturb so no exact orthogonality to
  // the dominant eigenvector survives.
  for (int i = 0; i < n; ++i) v(i) += 1e-3 * std::cos(1.0 + i);
  v.normalize();

  auto apply = [&](const Vector& x) {
    Vector y = a * x + shift * x;
    for (const auto& p : deflated) {
      y -= (p.value + shift) * p.vector * (p.vector.dot(x));
    }
    return y;
  };
  auto orthogonalize = [&](Vector& x) {
    for (const auto& p : deflated) x -= p.vector * (p.vector.dot(x));
  };

  orthogonalize(v);
  v.normalize();
  EigenPair out;
  const long max_iters = 2'000'000;
  for (long it = 0; it < max_iters; ++it) {
    Vector w = apply(v);
    orthogonalize(w);
    const double norm = w.norm();
    if (norm == 0.0) {
      // a acts as zero on the deflated complement
      out.value = -shift;
      out.vector = v;
      out.residual = 0.0;
      return out;
    }
    v = w / norm;
    const double lambda = v.dot(a * v);
    const double res = (a * v - lambda * v).norm();
    if (res <= target_residual || it == max_iters - 1) {
      out.value = lambda;
      out.vector = v;
      out.residual = res;
      return out;
    }
  }
  return out;
}

}  // namespace

OracleSolution leading_eigenvector(const Matrix& a) {
  check_symmetric(a);
  if (a.rows() < 2) throw PreconditionError("matrix must be at least 2x2");
  const double shift = a.cwiseAbs().colwise().sum().maxCoeff();
  const EigenPair top = dominant_pair(a, shift, {}, 1e-12);
  const EigenPair second = dominant_pair(a, shift, {top}, 1e-9);
  if (top.value - second.value <= 1e-10) {
    throw Error("degenerate leading eigenvalue");
  }
  OracleSolution s;
  s.kind = OracleSolution::Kind::Eigvec;
  Vector v = top.vector;
  fix_sign(v);
  s.value =
      ManifoldPoint(ManifoldDescriptor::sphere(static_cast<int>(a.rows())), v);
  s.residual = top.residual;
  s.eigenvalues = Vector(2);
  s.eigenvalues << top.value, second.value;
  return s;
}

OracleSolution top_subspace(const Matrix& a, int r) {
  check_symmetric(a);
  if (r < 1 || r >= a.rows()) {
    throw PreconditionError("need 1 <= r < n for top_subspace");
  }
  const double shift = a.cwiseAbs().colwise().sum().maxCoeff();
  std::vector<EigenPair> pairs;
  for (int l = 0; l <= r; ++l) {
    pairs.push_back(dominant_pair(a, shift, pairs, 1e-12));
  }
  if (pairs[r - 1].value - pairs[r].value <= 1e-10) {
    throw Error("degenerate eigenvalue gap at r");
  }
  Matrix basis(a.rows(), r);
  for (int l = 0; l < r; ++l) basis.col(l) = pairs[l].vector;
  // Deflation keeps the vectors orthogonal to ~1e-12; tighten with one QR.
  const ManifoldDescriptor d =
      ManifoldDescriptor::grassmann(static_cast<int>(a.rows()), r);
  basis = mf::to_manifold(d, basis);

  OracleSolution s;
  s.kind = OracleSolution::Kind::Subspace;
  s.value = ManifoldPoint(d, basis);
  s.residual = (a * basis - basis * (basis.transpose() * a * basis)).norm();
  s.eigenvalues = Vector(r + 1);
  for (int l = 0; l <= r; ++l) s.eigenvalues(l) = pairs[l].value;
  return s;
}

OracleSolution frechet_mean(const ManifoldDescriptor& d,
                            const std::vector<Matrix>& points, double tol) {
  if (points.empty()) throw PreconditionError("frechet mean of no points");
  Matrix x = points.front();
  const double n = static_cast<double>(points.size());
  for (int it = 0; it < 10'000; ++it) {
    Matrix mean_log = Matrix::Zero(x.rows(), x.cols());
    try {
      for (const auto& p : points) {
        mean_log += mf::log(d, x, p);
      }
    } catch (const GeometryError&) {
      throw Error("points not in a convex ball");
    }
    mean_log /= n;
    const double res = mean_log.norm();
    if (res <= tol) {
      OracleSolution s;
      s.kind = OracleSolution::Kind::FrechetMean;
      s.value = ManifoldPoint(d, x);
      s.residual = res;
      return s;
    }
    x = mf::exp(d, x, mean_log);
  }
  throw Error("points not in a convex ball");
}

FlowTrajectory flow_integrate(const ManifoldDescriptor& d,
                              const ScalarField& f, const Matrix& x0,
                              double dt, double horizon) {
  if (dt <= 0.0 || horizon <= 0.0) {
    throw PreconditionError("dt and horizon must be positive");
  }
  if (dt > 1e-3 * horizon) {
    throw PreconditionError("dt must be at most horizon/1000");
  }
  FlowTrajectory out;
  const int steps = static_cast<int>(std::ceil(horizon / dt));
  out.times.reserve(steps + 1);
  out.points.reserve(steps + 1);
  out.cost_values.reserve(steps + 1);
  Matrix x = x0;
  double t = 0.0;
  out.times.push_back(t);
  out.points.push_back(x);
  out.cost_values.push_back(f.value(x));
  for (int m = 0; m < steps; ++m) {
    const double h = std::min(dt, horizon - t);
    x = mf::exp(d, x, -h * f.grad(x));
    t += h;
    out.times.push_back(t);
    out.points.push_back(x);
    out.cost_values.push_back(f.value(x));
  }
  out.terminal_grad_norm = f.grad(x).norm();
  return out;
}

IteratePath constant_step_iterates(const ManifoldDescriptor& d,
                                   const ScalarField& f, const Matrix& x0,
                                   double step, double horizon) {
  IteratePath path;
  Matrix x = x0;
  double t = 0.0;
  path.times.push_back(t);
  path.points.push_back(x);
  while (t < horizon - 1e-12) {
    x = mf::retract(d, x, -step * f.grad(x));
    t += step;
    path.times.push_back(t);
    path.points.push_back(x);
  }
  return path;
}

double compare_to_flow(const ManifoldDescriptor& d, const IteratePath& path,
                       const ScalarField& f, double horizon) {
  if (path.points.size() < 2) return 0.0;
  const double t0 = path.times.front();
  const double min_gap = path.times[1] - path.times[0];
  const double dt = std::min(1e-3 * horizon, min_gap / 8.0);
  const FlowTrajectory flow =
      flow_integrate(d, f, path.points.front(), dt, horizon);

  // Geodesic interpolation of the iterate path at absolute time t.
  auto interpolate = [&](double t) -> Matrix {
    auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - path.times.begin());
    if (hi >= path.times.size()) hi = path.times.size() - 1;
    if (hi == 0) return path.points.front();
    const std::size_t lo = hi - 1;
    const double span = path.times[hi] - path.times[lo];
    const double s = span > 0.0 ? (t - path.times[lo]) / span : 0.0;
    const Matrix leg = mf::log(d, path.points[lo], path.points[hi]);
    return mf::exp(d, path.points[lo], s * leg);
  };

  double sup = 0.0;
  for (std::size_t m = 0; m < flow.times.size(); ++m) {
    const double t = t0 + flow.times[m];
    if (flow.times[m] > horizon + 1e-12) break;
    if (t > path.times.back() + 1e-12) break;
    sup = std::max(sup, mf::distance(d, interpolate(t), flow.points[m]));
  }
  return sup;
}

double fd_gradient_check(const ManifoldDescriptor& d, const ScalarField& f,
                         const Matrix& x, int directions, double t,
                         RngStream& stream) {
  if (t < 1e-7 || t > 1e-3) {
    throw PreconditionError("fd step must lie in [1e-7, 1e-3]");
  }
  const Matrix grad = f.grad(x);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    Matrix v = mf::random_tangent(d, x, 1.0, stream);
    const double n = v.norm();
    if (n == 0.0) continue;
    v /= n;
    const double fd =
        (f.value(mf::exp(d, x, t * v)) - f.value(mf::exp(d, x, -t * v))) /
        (2.0 * t);
    const double ip = mf::inner(grad, v);
    const double err = std::abs(fd - ip) / std::max(std::abs(ip), 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace mcons
