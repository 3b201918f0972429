#include "mcons/manifold.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mcons {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Sphere log is undefined at (numerically) antipodal points.
constexpr double kAntipodalMargin = 1e-6;

// Points drifting further than this from the manifold get re-normalized.
constexpr double kDriftTol = 1e-12;

void check_shape(const ManifoldDescriptor& d, const Matrix& m,
                 const char* what) {
  if (m.rows() != d.ambient_rows || m.cols() != d.cols) {
    throw PreconditionError(std::string(what) + ": expected " +
                            std::to_string(d.ambient_rows) + "x" +
                            std::to_string(d.cols) + ", got " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
}

/// Thin QR with the sign convention diag(R) >= 0, so the factor is unique.
Matrix qr_orthonormalize(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  const Matrix r =
      qr.matrixQR().topLeftCorner(m.cols(), m.cols()).triangularView<Eigen::Upper>();
  for (int j = 0; j < m.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

struct ThinSvd {
  Matrix u;       // rows x k
  Vector sigma;   // k, descending
  Matrix v;       // cols x k
};

/// Thin SVD with deterministic column signs: the first entry of each left
/// singular vector that exceeds 1e-12 in magnitude is made positive.
ThinSvd canonical_svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (int j = 0; j < out.u.cols(); ++j) {
    for (int i = 0; i < out.u.rows(); ++i) {
      if (std::abs(out.u(i, j)) > 1e-12) {
        if (out.u(i, j) < 0.0) {
          out.u.col(j) = -out.u.col(j);
          out.v.col(j) = -out.v.col(j);
        }
        break;
      }
    }
  }
  return out;
}

/// Angle between unit vectors, accurate near 0 and near pi.
double sphere_angle(const Matrix& x, const Matrix& y) {
  if (x.col(0).dot(y.col(0)) >= 0.0) {
    return 2.0 * std::asin(std::min(1.0, 0.5 * (x - y).norm()));
  }
  return kPi - 2.0 * std::asin(std::min(1.0, 0.5 * (x + y).norm()));
}

/// Principal angles between the spans of orthonormal X and Y, ascending.
Vector principal_angles(const Matrix& x, const Matrix& y) {
  const Matrix m = x.transpose() * y;
  Eigen::JacobiSVD<Matrix> cos_svd(m);
  Eigen::JacobiSVD<Matrix> sin_svd(y - x * m);
  const Vector c = cos_svd.singularValues();   // descending
  const Vector s = sin_svd.singularValues();   // descending
  const int r = static_cast<int>(c.size());
  Vector angles(r);
  // cos descending pairs with sin ascending; atan2 keeps both ends accurate.
  for (int l = 0; l < r; ++l) {
    const double cl = std::clamp(c(l), 0.0, 1.0);
    const double sl = std::clamp(s(r - 1 - l), 0.0, 1.0);
    angles(l) = std::atan2(sl, cl);
  }
  return angles;
}

Matrix maybe_renormalize(const ManifoldDescriptor& d, Matrix x) {
  if (mf::point_residual(d, x) > kDriftTol) {
    return mf::to_manifold(d, x);
  }
  return x;
}

}  // namespace

ManifoldDescriptor ManifoldDescriptor::sphere(int ambient_rows) {
  if (ambient_rows < 2) {
    throw PreconditionError("sphere requires ambient dimension >= 2");
  }
  ManifoldDescriptor d;
  d.kind = ManifoldKind::Sphere;
  d.ambient_rows = ambient_rows;
  d.cols = 1;
  d.injectivity_radius = kPi;
  d.convexity_radius = kPi / 2.0;
  return d;
}

ManifoldDescriptor ManifoldDescriptor::grassmann(int ambient_rows, int cols) {
  if (cols < 1 || ambient_rows <= cols) {
    throw PreconditionError("grassmann requires 1 <= r < n");
  }
  ManifoldDescriptor d;
  d.kind = ManifoldKind::Grassmann;
  d.ambient_rows = ambient_rows;
  d.cols = cols;
  // Largest principal angle of a subspace pair with invertible overlap.
  d.injectivity_radius = kPi / 2.0;
  // kappa_max = 2 for Grassmann: r_c = min(inj, pi/sqrt(2)) / 2.
  d.convexity_radius = std::min(kPi / 2.0, kPi / std::sqrt(2.0)) / 2.0;
  return d;
}

ManifoldDescriptor ManifoldDescriptor::euclidean(int ambient_rows, int cols) {
  if (ambient_rows < 1 || cols < 1) {
    throw PreconditionError("euclidean requires positive dimensions");
  }
  ManifoldDescriptor d;
  d.kind = ManifoldKind::Euclidean;
  d.ambient_rows = ambient_rows;
  d.cols = cols;
  d.injectivity_radius = kInf;
  d.convexity_radius = kInf;
  return d;
}

const char* ManifoldDescriptor::kind_name() const {
  switch (kind) {
    case ManifoldKind::Sphere:
      return "sphere";
    case ManifoldKind::Grassmann:
      return "grassmann";
    case ManifoldKind::Euclidean:
      return "euclidean";
  }
  return "?";
}

namespace mf {

double point_residual(const ManifoldDescriptor& d, const Matrix& x) {
  switch (d.kind) {
    case ManifoldKind::Sphere:
      return std::abs(x.norm() - 1.0);
    case ManifoldKind::Grassmann:
      return (x.transpose() * x - Matrix::Identity(d.cols, d.cols))
          .cwiseAbs()
          .maxCoeff();
    case ManifoldKind::Euclidean:
      return 0.0;
  }
  return 0.0;
}

double tangent_residual(const ManifoldDescriptor& d, const Matrix& x,
                        const Matrix& v) {
  if (d.kind == ManifoldKind::Euclidean) return 0.0;
  return (x.transpose() * v).cwiseAbs().maxCoeff();
}

Matrix to_manifold(const ManifoldDescriptor& d, const Matrix& m) {
  check_shape(d, m, "to_manifold");
  switch (d.kind) {
    case ManifoldKind::Sphere: {
      const double n = m.norm();
      if (n == 0.0) throw PreconditionError("cannot normalize zero vector");
      return m / n;
    }
    case ManifoldKind::Grassmann:
      return qr_orthonormalize(m);
    case ManifoldKind::Euclidean:
      return m;
  }
  return m;
}

double distance(const ManifoldDescriptor& d, const Matrix& x, const Matrix& y) {
  switch (d.kind) {
    case ManifoldKind::Sphere:
      return sphere_angle(x, y);
    case ManifoldKind::Grassmann:
      return principal_angles(x, y).norm();
    case ManifoldKind::Euclidean:
      return (x - y).norm();
  }
  return 0.0;
}

bool within_injectivity(const ManifoldDescriptor& d, const Matrix& x,
                        const Matrix& y) {
  switch (d.kind) {
    case ManifoldKind::Sphere:
      return sphere_angle(x, y) < kPi - kAntipodalMargin;
    case ManifoldKind::Grassmann:
      return principal_angles(x, y).maxCoeff() <
             kPi / 2.0 - kAntipodalMargin;
    case ManifoldKind::Euclidean:
      return true;
  }
  return true;
}

Matrix exp(const ManifoldDescriptor& d, const Matrix& x, const Matrix& v) {
  switch (d.kind) {
    case ManifoldKind::Sphere: {
      const double t = v.norm();
      if (t == 0.0) return x;
      Matrix out = x * std::cos(t) + (v / t) * std::sin(t);
      return maybe_renormalize(d, std::move(out));
    }
    case ManifoldKind::Grassmann: {
      if (v.norm() == 0.0) return x;
      const ThinSvd svd = canonical_svd(v);
      const Matrix out =
          (x * svd.v) * svd.sigma.array().cos().matrix().asDiagonal() *
              svd.v.transpose() +
          svd.u * svd.sigma.array().sin().matrix().asDiagonal() *
              svd.v.transpose();
      return qr_orthonormalize(out);
    }
    case ManifoldKind::Euclidean:
      return x + v;
  }
  return x;
}

Matrix log(const ManifoldDescriptor& d, const Matrix& x, const Matrix& y) {
  switch (d.kind) {
    case ManifoldKind::Sphere: {
      const double theta = sphere_angle(x, y);
      if (theta >= kPi - kAntipodalMargin) {
        throw GeometryError("outside injectivity radius");
      }
      if (theta < 1e-15) return Matrix::Zero(x.rows(), x.cols());
      Matrix dir = y - std::cos(theta) * x;
      // Re-project and rescale so the tangency and norm contracts hold even
      // when theta is close to pi and the subtraction is ill-conditioned.
      dir -= x * (x.col(0).dot(dir.col(0)));
      const double n = dir.norm();
      if (n == 0.0) return Matrix::Zero(x.rows(), x.cols());
      return dir * (theta / n);
    }
    case ManifoldKind::Grassmann: {
      const Matrix m = x.transpose() * y;
      Eigen::JacobiSVD<Matrix> overlap(m);
      if (overlap.singularValues().minCoeff() <= kAntipodalMargin) {
        throw GeometryError("outside injectivity radius");
      }
      const Matrix rest = (y - x * m) * m.inverse();
      const ThinSvd svd = canonical_svd(rest);
      Matrix atans = svd.sigma.array().atan().matrix().asDiagonal();
      return svd.u * atans * svd.v.transpose();
    }
    case ManifoldKind::Euclidean:
      return y - x;
  }
  return Matrix();
}

Matrix retract(const ManifoldDescriptor& d, const Matrix& x, const Matrix& v) {
  switch (d.kind) {
    case ManifoldKind::Sphere: {
      const Matrix s = x + v;
      return s / s.norm();
    }
    case ManifoldKind::Grassmann:
      return qr_orthonormalize(x + v);
    case ManifoldKind::Euclidean:
      return x + v;
  }
  return x;
}

Matrix transport(const ManifoldDescriptor& d, const Matrix& x, const Matrix& y,
                 const Matrix& v) {
  switch (d.kind) {
    case ManifoldKind::Sphere: {
      const double theta = sphere_angle(x, y);
      if (theta >= kPi - kAntipodalMargin) {
        throw GeometryError("outside injectivity radius");
      }
      if (theta < 1e-14) return v;
      const Matrix u = log(d, x, y) / theta;
      const double a = u.col(0).dot(v.col(0));
      // Rotate the along-geodesic component, keep the orthogonal complement.
      return v + a * ((std::cos(theta) - 1.0) * u - std::sin(theta) * x);
    }
    case ManifoldKind::Grassmann: {
      if (!within_injectivity(d, x, y)) {
        throw GeometryError("outside injectivity radius");
      }
      return v - y * (y.transpose() * v);
    }
    case ManifoldKind::Euclidean:
      return v;
  }
  return v;
}

Matrix project(const ManifoldDescriptor& d, const Matrix& x, const Matrix& a) {
  check_shape(d, a, "project_tangent");
  switch (d.kind) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Grassmann:
      return a - x * (x.transpose() * a);
    case ManifoldKind::Euclidean:
      return a;
  }
  return a;
}

Matrix random_tangent(const ManifoldDescriptor& d, const Matrix& x,
                      double sigma, RngStream& stream) {
  if (sigma < 0.0) throw PreconditionError("sigma must be nonnegative");
  Matrix g(d.ambient_rows, d.cols);
  for (int j = 0; j < d.cols; ++j) {
    for (int i = 0; i < d.ambient_rows; ++i) {
      g(i, j) = stream.normal(sigma);
    }
  }
  if (sigma == 0.0) g.setZero();
  return project(d, x, g);
}

Matrix random_point(const ManifoldDescriptor& d, RngStream& stream) {
  Matrix g(d.ambient_rows, d.cols);
  for (int j = 0; j < d.cols; ++j) {
    for (int i = 0; i < d.ambient_rows; ++i) {
      g(i, j) = stream.normal();
    }
  }
  if (d.kind == ManifoldKind::Euclidean) return g;
  return to_manifold(d, g);
}

}  // namespace mf

ManifoldPoint::ManifoldPoint(const ManifoldDescriptor& d, Matrix c)
    : descriptor(d), coords(std::move(c)) {
  check_shape(d, coords, "point");
  if (mf::point_residual(d, coords) > 1e-10) {
    throw PreconditionError(std::string("matrix is not a ") + d.kind_name() +
                            " point");
  }
}

bool ManifoldPoint::same_point(const ManifoldPoint& o, double tol) const {
  return descriptor == o.descriptor && coords.rows() == o.coords.rows() &&
         coords.cols() == o.coords.cols() &&
         (coords - o.coords).cwiseAbs().maxCoeff() <= tol;
}

TangentVector::TangentVector(ManifoldPoint b, Matrix c)
    : base(std::move(b)), coords(std::move(c)) {
  check_shape(base.descriptor, coords, "tangent vector");
  if (mf::tangent_residual(base.descriptor, base.coords, coords) > 1e-10) {
    throw PreconditionError("matrix is not tangent at the base point");
  }
}

double inner(const TangentVector& u, const TangentVector& v) {
  if (!u.base.same_point(v.base)) {
    throw PreconditionError("tangent vectors at different points");
  }
  return mf::inner(u.coords, v.coords);
}

double distance(const ManifoldPoint& x, const ManifoldPoint& y) {
  if (!(x.descriptor == y.descriptor)) {
    throw PreconditionError("points on different manifolds");
  }
  return mf::distance(x.descriptor, x.coords, y.coords);
}

ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& v) {
  if (!v.base.same_point(x)) {
    throw PreconditionError("tangent vector not based at x");
  }
  return {x.descriptor, mf::exp(x.descriptor, x.coords, v.coords)};
}

TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y) {
  if (!(x.descriptor == y.descriptor)) {
    throw PreconditionError("points on different manifolds");
  }
  return {x, mf::log(x.descriptor, x.coords, y.coords)};
}

ManifoldPoint retract(const ManifoldPoint& x, const TangentVector& v) {
  if (!v.base.same_point(x)) {
    throw PreconditionError("tangent vector not based at x");
  }
  return {x.descriptor, mf::retract(x.descriptor, x.coords, v.coords)};
}

TangentVector transport(const ManifoldPoint& x, const ManifoldPoint& y,
                        const TangentVector& v) {
  if (!v.base.same_point(x)) {
    throw PreconditionError("tangent vector not based at x");
  }
  if (!(x.descriptor == y.descriptor)) {
    throw PreconditionError("points on different manifolds");
  }
  return {y, mf::transport(x.descriptor, x.coords, y.coords, v.coords)};
}

TangentVector project_tangent(const ManifoldPoint& x, const Matrix& ambient) {
  return {x, mf::project(x.descriptor, x.coords, ambient)};
}

TangentVector random_tangent(const ManifoldPoint& x, double sigma,
                             RngStream& stream) {
  return {x, mf::random_tangent(x.descriptor, x.coords, sigma, stream)};
}

ManifoldPoint random_point(const ManifoldDescriptor& d, RngStream& stream) {
  return {d, mf::random_point(d, stream)};
}

}  // namespace mcons
