#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mcons {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated operation precondition (mismatched shapes, bad arguments).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Geometry failure: points too far apart for the requested map.
class GeometryError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcons
