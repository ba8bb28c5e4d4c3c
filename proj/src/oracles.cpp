#include "noisy_stm/oracles.hpp"

#include <cmath>
#include <string>

namespace noisy_stm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Shrinks r by ulps until ||r|| <= bound, so realized noise never exceeds it.
double clamp_norm(Vector& r, double bound) {
  double n = r.norm();
  while (n > bound) {
    r *= std::nextafter(1.0, 0.0);
    n = r.norm();
  }
  return n;
}

void require_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step h must be positive");
}

template <class Weight>
Vector antithetic_mean(const ValueOracle& f, const Vector& x, double h,
                       std::span<const Vector> directions, Weight weight) {
  require_step(h);
  if (directions.empty()) throw ConfigError("need at least one direction");
  Vector acc = Vector::Zero(x.size());
  for (const Vector& e : directions) {
    if (e.size() != x.size()) throw ConfigError("direction has the wrong dimension");
    const double diff = f(x + h * e) - f(x - h * e);
    acc += (weight * diff / (2.0 * h)) * e;
  }
  return acc / static_cast<double>(directions.size());
}

std::vector<Vector> draw_directions(Rng& rng, Eigen::Index n, int samples, bool sphere) {
  if (samples < 1) throw ConfigError("sample count must be >= 1");
  std::vector<Vector> dirs;
  dirs.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) {
    dirs.push_back(sphere ? rng.unit_sphere(n) : rng.normal_vector(n));
  }
  return dirs;
}

}  // namespace

void validate(const NoiseModel& model, Eigen::Index dim) {
  std::visit(overloaded{
                 [](const NoNoise&) {},
                 [dim](const AbsoluteNoise& a) {
                   if (!(a.delta >= 0.0) || !std::isfinite(a.delta)) {
                     throw ConfigError("absolute noise: delta must be >= 0");
                   }
                   if (a.mode == AbsoluteNoise::Mode::fixed_bias) {
                     if (dim >= 0 && a.bias.size() != dim) {
                       throw ConfigError("absolute noise: bias has the wrong dimension");
                     }
                     if (a.bias.norm() > a.delta) {
                       throw ConfigError("absolute noise: ||bias|| exceeds delta");
                     }
                   }
                 },
                 [](const RelativeNoise& r) {
                   if (!(r.alpha >= 0.0) || !(r.alpha < 1.0)) {
                     throw ConfigError("relative noise: alpha must lie in [0, 1)");
                   }
                 },
             },
             model);
}

NoisyGradient perturb(const Vector& exact_gradient, const NoiseModel& model, Rng& rng) {
  validate(model, exact_gradient.size());
  const Eigen::Index n = exact_gradient.size();
  return std::visit(
      overloaded{
          [&](const NoNoise&) { return NoisyGradient{exact_gradient, 0.0}; },
          [&](const AbsoluteNoise& a) {
            Vector r = a.mode == AbsoluteNoise::Mode::fixed_bias
                           ? a.bias
                           : Vector(a.delta * rng.unit_sphere(n));
            const double nr = clamp_norm(r, a.delta);
            return NoisyGradient{exact_gradient + r, nr};
          },
          [&](const RelativeNoise& rel) {
            const double bound = rel.alpha * exact_gradient.norm();
            Vector r = rel.mode == RelativeNoise::Mode::shrink
                           ? Vector(-rel.alpha * exact_gradient)
                           : Vector(bound * rng.unit_sphere(n));
            const double nr = clamp_norm(r, bound);
            return NoisyGradient{exact_gradient + r, nr};
          },
      },
      model);
}

NoisyGradient noisy_gradient(const SmoothProblem& problem, const Vector& x,
                             const NoiseModel& model, Rng& rng) {
  return perturb(evaluate(problem, x).gradient, model, rng);
}

ValueOracle noisy_value_oracle(const SmoothProblem& problem, double delta_f, Rng& rng) {
  if (!(delta_f >= 0.0)) throw ConfigError("delta_f must be >= 0");
  if (delta_f == 0.0) return problem.value;
  return [value = problem.value, delta_f, &rng](const Vector& x) {
    return value(x) + rng.uniform(-delta_f, delta_f);
  };
}

Vector central_fd_gradient(const ValueOracle& f, const Vector& x, double h) {
  require_step(h);
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi + h == xi || xi - h == xi) {
      throw NumericError("central differences: step too small at index " + std::to_string(i));
    }
    probe[i] = xi + h;
    const double fp = f(probe);
    probe[i] = xi - h;
    const double fm = f(probe);
    probe[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vector sphere_smoothed_gradient(const ValueOracle& f, const Vector& x, double h,
                                std::span<const Vector> directions) {
  return antithetic_mean(f, x, h, directions, static_cast<double>(x.size()));
}

Vector sphere_smoothed_gradient(const ValueOracle& f, const Vector& x, double h, int samples,
                                Rng& rng) {
  const auto dirs = draw_directions(rng, x.size(), samples, true);
  return sphere_smoothed_gradient(f, x, h, dirs);
}

Vector gaussian_smoothed_gradient(const ValueOracle& f, const Vector& x, double h,
                                  std::span<const Vector> directions) {
  return antithetic_mean(f, x, h, directions, 1.0);
}

Vector gaussian_smoothed_gradient(const ValueOracle& f, const Vector& x, double h, int samples,
                                  Rng& rng) {
  const auto dirs = draw_directions(rng, x.size(), samples, false);
  return gaussian_smoothed_gradient(f, x, h, dirs);
}

FdBudget fd_error_budget(int p, double L_p, Eigen::Index n, double delta_f) {
  if (p != 1 && p != 2) throw ConfigError("finite-difference order must be 1 or 2");
  if (!(L_p > 0.0)) throw ConfigError("L_p must be > 0");
  if (n < 1) throw ConfigError("dimension must be >= 1");
  if (!(delta_f >= 0.0)) throw ConfigError("delta_f must be >= 0");
  FdBudget b;
  if (delta_f == 0.0) return b;
  const double h = std::pow(delta_f / L_p, 1.0 / (p + 1));
  b.h_opt = h;
  b.delta_bound = b.constant * std::sqrt(static_cast<double>(n)) *
                  (L_p * std::pow(h, p) + delta_f / h);
  return b;
}

OracleSample query(const GradientOracle& oracle, const SmoothProblem& problem, const Vector& x,
                   Rng& rng) {
  Evaluation ev = evaluate(problem, x);
  OracleSample s;
  s.value = ev.value;
  s.exact_gradient = std::move(ev.gradient);
  std::visit(overloaded{
                 [&](const NoiseModel& m) {
                   NoisyGradient ng = perturb(s.exact_gradient, m, rng);
                   s.gradient = std::move(ng.g);
                   s.noise_norm = ng.noise_norm;
                   s.calls = 1;
                 },
                 [&](const ZerothOrder& z) {
                   const ValueOracle f = noisy_value_oracle(problem, z.value_noise, rng);
                   switch (z.scheme) {
                     case ZerothOrder::Scheme::central_fd:
                       s.gradient = central_fd_gradient(f, x, z.h);
                       s.calls = 2 * x.size();
                       break;
                     case ZerothOrder::Scheme::sphere:
                       s.gradient = sphere_smoothed_gradient(f, x, z.h, z.samples, rng);
                       s.calls = 2LL * z.samples;
                       break;
                     case ZerothOrder::Scheme::gaussian:
                       s.gradient = gaussian_smoothed_gradient(f, x, z.h, z.samples, rng);
                       s.calls = 2LL * z.samples;
                       break;
                   }
                   s.noise_norm = (s.gradient - s.exact_gradient).norm();
                 },
             },
             oracle.source);
  return s;
}

std::optional<double> absolute_delta(const GradientOracle& oracle) {
  const auto* m = std::get_if<NoiseModel>(&oracle.source);
  if (!m) return std::nullopt;
  if (std::holds_alternative<NoNoise>(*m)) return 0.0;
  if (const auto* a = std::get_if<AbsoluteNoise>(m)) return a->delta;
  return std::nullopt;
}

}  // namespace noisy_stm
