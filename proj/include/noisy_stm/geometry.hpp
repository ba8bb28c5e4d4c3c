#pragma once

#include <variant>

#include "noisy_stm/types.hpp"

namespace noisy_stm {

struct WholeSpace {};

struct Box {
  Vector lo;
  Vector hi;
};

struct Ball {
  Vector center;
  double radius = 1.0;
};

/// Feasible set with a closed-form Euclidean projection.
using FeasibleSet = std::variant<WholeSpace, Box, Ball>;

/// Throws ConfigError for lo > hi, non-positive radius or a dimension that
/// does not match `dim` (dim < 0 skips the dimension check).
void validate(const FeasibleSet& set, Eigen::Index dim = -1);

Vector project(const FeasibleSet& set, const Vector& point);

bool is_whole_space(const FeasibleSet& set);

/// Membership up to `slack` in absolute terms.
bool contains(const FeasibleSet& set, const Vector& point, double slack = 1e-12);

}  // namespace noisy_stm
