#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace noisy_stm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid parameters, inconsistent dimensions or unsupported combinations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a numerically impossible request.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace tol {

// Every comparison in the library is relative with an absolute floor.
inline constexpr double kAbsFloor = 1e-12;

inline double scaled(double rel, double magnitude) {
  const double m = magnitude < 0 ? -magnitude : magnitude;
  return rel * m > kAbsFloor ? rel * m : kAbsFloor;
}

/// lhs <= rhs up to `rel` relative slack measured against `magnitude`.
inline bool leq(double lhs, double rhs, double rel, double magnitude) {
  return lhs <= rhs + scaled(rel, magnitude);
}

}  // namespace tol

/// Index of the first non-finite component, or -1.
inline Eigen::Index first_non_finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return i;
  }
  return -1;
}

}  // namespace noisy_stm
