#pragma once

#include <functional>
#include <optional>
#include <span>
#include <variant>

#include "noisy_stm/core.hpp"
#include "noisy_stm/rng.hpp"

namespace noisy_stm {

struct NoNoise {};

/// ||g~ - grad f(x)|| <= delta for every x.
struct AbsoluteNoise {
  enum class Mode { sphere_uniform, fixed_bias };
  double delta = 0.0;
  Mode mode = Mode::sphere_uniform;
  Vector bias;   // fixed_bias only, ||bias|| <= delta
};

/// ||g~ - grad f(x)|| <= alpha ||grad f(x)||, alpha in [0, 1).
struct RelativeNoise {
  enum class Mode { sphere_uniform, shrink };
  double alpha = 0.0;
  Mode mode = Mode::sphere_uniform;
};

using NoiseModel = std::variant<NoNoise, AbsoluteNoise, RelativeNoise>;

void validate(const NoiseModel& model, Eigen::Index dim = -1);

struct NoisyGradient {
  Vector g;
  double noise_norm = 0.0;
};

/// Adds a perturbation drawn from `model` to an exact gradient. The returned
/// noise norm never exceeds the model bound.
NoisyGradient perturb(const Vector& exact_gradient, const NoiseModel& model, Rng& rng);

NoisyGradient noisy_gradient(const SmoothProblem& problem, const Vector& x,
                             const NoiseModel& model, Rng& rng);

using ValueOracle = std::function<double(const Vector&)>;

/// f(x) + U[-delta_f, delta_f], one draw per call.
ValueOracle noisy_value_oracle(const SmoothProblem& problem, double delta_f, Rng& rng);

/// Component i is (f(x + h e_i) - f(x - h e_i)) / (2h); 2n value calls.
Vector central_fd_gradient(const ValueOracle& f, const Vector& x, double h);

/// Antithetic Monte-Carlo estimate of the sphere-smoothed gradient,
/// mean of (n / 2h)(f(x + h e) - f(x - h e)) e over the given unit directions.
Vector sphere_smoothed_gradient(const ValueOracle& f, const Vector& x, double h,
                                std::span<const Vector> directions);
Vector sphere_smoothed_gradient(const ValueOracle& f, const Vector& x, double h, int samples,
                                Rng& rng);

/// Same with standard normal directions and weight 1 / 2h.
Vector gaussian_smoothed_gradient(const ValueOracle& f, const Vector& x, double h,
                                  std::span<const Vector> directions);
Vector gaussian_smoothed_gradient(const ValueOracle& f, const Vector& x, double h, int samples,
                                  Rng& rng);

/// Step size and gradient error of p-th order finite differences with unit
/// constants: h = (delta_f / L_p)^(1/(p+1)), delta = sqrt(n)(L_p h^p + delta_f / h).
/// With delta_f == 0 any h works and `h_opt` is empty.
struct FdBudget {
  std::optional<double> h_opt;
  double delta_bound = 0.0;
  double constant = 1.0;
};

FdBudget fd_error_budget(int p, double L_p, Eigen::Index n, double delta_f);

struct ZerothOrder {
  enum class Scheme { central_fd, sphere, gaussian };
  Scheme scheme = Scheme::central_fd;
  double h = 1e-4;
  int samples = 1;
  double value_noise = 0.0;   // delta_f
};

/// Gradient source used by the solvers.
struct GradientOracle {
  std::variant<NoiseModel, ZerothOrder> source = NoiseModel{NoNoise{}};

  static GradientOracle exact() { return {}; }
  static GradientOracle with_noise(NoiseModel m) { return {std::move(m)}; }
  static GradientOracle zeroth_order(ZerothOrder z) { return {z}; }
};

struct OracleSample {
  double value = 0.0;         // exact f(x)
  Vector exact_gradient;
  Vector gradient;            // what the method sees
  double noise_norm = 0.0;
  long long calls = 0;        // gradient queries or value queries
};

OracleSample query(const GradientOracle& oracle, const SmoothProblem& problem, const Vector& x,
                   Rng& rng);

/// delta of an absolute model, 0 for exact oracles, empty otherwise.
std::optional<double> absolute_delta(const GradientOracle& oracle);

}  // namespace noisy_stm
