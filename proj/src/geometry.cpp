#include "noisy_stm/geometry.hpp"

#include <string>

namespace noisy_stm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_dim(Eigen::Index have, Eigen::Index want, const char* what) {
  if (want >= 0 && have != want) {
    throw ConfigError(std::string(what) + ": dimension " + std::to_string(have) +
                      " does not match " + std::to_string(want));
  }
}

}  // namespace

void validate(const FeasibleSet& set, Eigen::Index dim) {
  std::visit(overloaded{
                 [](const WholeSpace&) {},
                 [dim](const Box& b) {
                   if (b.lo.size() != b.hi.size()) {
                     throw ConfigError("box: lo and hi differ in length");
                   }
                   check_dim(b.lo.size(), dim, "box");
                   for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
                     if (!(b.lo[i] <= b.hi[i])) {
                       throw ConfigError("box: lo > hi at index " + std::to_string(i));
                     }
                   }
                 },
                 [dim](const Ball& b) {
                   check_dim(b.center.size(), dim, "ball");
                   if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
                     throw ConfigError("ball: radius must be positive and finite");
                   }
                 },
             },
             set);
}

Vector project(const FeasibleSet& set, const Vector& point) {
  return std::visit(
      overloaded{
          [&](const WholeSpace&) -> Vector { return point; },
          [&](const Box& b) -> Vector {
            check_dim(point.size(), b.lo.size(), "project(box)");
            validate(set);
            return point.cwiseMax(b.lo).cwiseMin(b.hi);
          },
          [&](const Ball& b) -> Vector {
            check_dim(point.size(), b.center.size(), "project(ball)");
            validate(set);
            const Vector d = point - b.center;
            const double r = d.norm();
            if (r <= b.radius) return point;
            return b.center + (b.radius / r) * d;
          },
      },
      set);
}

bool is_whole_space(const FeasibleSet& set) {
  return std::holds_alternative<WholeSpace>(set);
}

bool contains(const FeasibleSet& set, const Vector& point, double slack) {
  return std::visit(overloaded{
                        [](const WholeSpace&) { return true; },
                        [&](const Box& b) {
                          return ((point - b.lo).array() >= -slack).all() &&
                                 ((b.hi - point).array() >= -slack).all();
                        },
                        [&](const Ball& b) {
                          return (point - b.center).norm() <= b.radius + slack;
                        },
                    },
                    set);
}

}  // namespace noisy_stm
