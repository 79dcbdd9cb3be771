#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace soco {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A decision x_t in R^n.
using ActionVector = Eigen::VectorXd;
/// A context y_t in R^m that parameterizes the hitting cost.
using Context = Eigen::VectorXd;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between inputs; `index` names the offending element
/// (a step, a slot or a row depending on the call site), -1 if none.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, int index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// Invalid user configuration (bad lambda, unsupported reduction, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A solver failed to reach its tolerance or an invariant broke in floating point.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// An instance whose reference cost is not positive, so ratios are undefined.
class DegenerateInstanceError : public Error {
 public:
  DegenerateInstanceError(const std::string& what, int index)
      : Error(what + " (instance " + std::to_string(index) + ")"), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// File system or parse failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Axis-aligned box of feasible actions.
struct ActionSpace {
  Vector lower;
  Vector upper;

  static ActionSpace box(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower.size()); }
  /// Euclidean distance between the two extreme corners.
  double diameter() const;
  Vector clip(const Vector& x) const;
  bool contains(const Vector& x, double tol = 0.0) const;
  void validate() const;
};

}  // namespace soco
