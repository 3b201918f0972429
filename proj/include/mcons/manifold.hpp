#pragma once

#include "mcons/rng.hpp"
#include "mcons/types.hpp"

namespace mcons {

enum class ManifoldKind { Sphere, Grassmann, Euclidean };

/// Static description of the space a point lives on.
///
/// Sphere points are unit vectors in R^n (n = ambient_rows, cols = 1).
/// Grassmann points are n x r matrices with orthonormal columns, each matrix
/// standing for the subspace its columns span. Euclidean is the flat baseline
/// with both radii infinite.
struct ManifoldDescriptor {
  ManifoldKind kind = ManifoldKind::Euclidean;
  int ambient_rows = 1;
  int cols = 1;
  double convexity_radius = std::numeric_limits<double>::infinity();
  double injectivity_radius = std::numeric_limits<double>::infinity();

  static ManifoldDescriptor sphere(int ambient_rows);
  static ManifoldDescriptor grassmann(int ambient_rows, int cols);
  static ManifoldDescriptor euclidean(int ambient_rows, int cols = 1);

  bool operator==(const ManifoldDescriptor& o) const {
    return kind == o.kind && ambient_rows == o.ambient_rows && cols == o.cols;
  }

  const char* kind_name() const;
};

// ---------------------------------------------------------------------------
// Low-level interface: points and tangents as plain matrices whose meaning is
// fixed by a descriptor. All functions are pure; used by the hot loops.
// ---------------------------------------------------------------------------
namespace mf {

double distance(const ManifoldDescriptor& d, const Matrix& x, const Matrix& y);
Matrix exp(const ManifoldDescriptor& d, const Matrix& x, const Matrix& v);
Matrix log(const ManifoldDescriptor& d, const Matrix& x, const Matrix& y);
Matrix retract(const ManifoldDescriptor& d, const Matrix& x, const Matrix& v);
Matrix transport(const ManifoldDescriptor& d, const Matrix& x, const Matrix& y,
                 const Matrix& v);
Matrix project(const ManifoldDescriptor& d, const Matrix& x, const Matrix& a);
Matrix random_tangent(const ManifoldDescriptor& d, const Matrix& x,
                      double sigma, RngStream& stream);
Matrix random_point(const ManifoldDescriptor& d, RngStream& stream);

/// True when log(x, y) (and hence transport along the geodesic) is defined.
bool within_injectivity(const ManifoldDescriptor& d, const Matrix& x,
                        const Matrix& y);

/// Projects an ambient matrix onto the manifold (normalize / thin QR).
Matrix to_manifold(const ManifoldDescriptor& d, const Matrix& m);

/// How far the matrix is from satisfying the point invariant.
double point_residual(const ManifoldDescriptor& d, const Matrix& x);

/// How far v is from the tangent space at x.
double tangent_residual(const ManifoldDescriptor& d, const Matrix& x,
                        const Matrix& v);

inline double inner(const Matrix& u, const Matrix& v) {
  return (u.array() * v.array()).sum();
}

inline double norm(const Matrix& u) { return u.norm(); }

}  // namespace mf

// ---------------------------------------------------------------------------
// Typed interface: carries the descriptor with the data and enforces the
// operation preconditions. Construction validates the invariants.
// ---------------------------------------------------------------------------

struct ManifoldPoint {
  ManifoldDescriptor descriptor;
  Matrix coords;

  ManifoldPoint() = default;
  ManifoldPoint(const ManifoldDescriptor& d, Matrix c);

  bool same_point(const ManifoldPoint& o, double tol = 1e-12) const;
};

struct TangentVector {
  ManifoldPoint base;
  Matrix coords;

  TangentVector() = default;
  TangentVector(ManifoldPoint b, Matrix c);

  double norm() const { return coords.norm(); }
};

double inner(const TangentVector& u, const TangentVector& v);
double distance(const ManifoldPoint& x, const ManifoldPoint& y);
ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& v);
TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y);
ManifoldPoint retract(const ManifoldPoint& x, const TangentVector& v);
TangentVector transport(const ManifoldPoint& x, const ManifoldPoint& y,
                        const TangentVector& v);
TangentVector project_tangent(const ManifoldPoint& x, const Matrix& ambient);
TangentVector random_tangent(const ManifoldPoint& x, double sigma,
                             RngStream& stream);
ManifoldPoint random_point(const ManifoldDescriptor& d, RngStream& stream);

}  // namespace mcons
