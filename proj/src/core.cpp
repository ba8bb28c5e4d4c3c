#include "noisy_stm/core.hpp"

#include <cmath>

namespace noisy_stm {

void validate(const SmoothProblem& problem) {
  if (problem.dim < 1) throw ConfigError("problem dimension must be >= 1");
  if (!problem.value || !problem.gradient) {
    throw ConfigError("problem needs both value and gradient");
  }
  if (!(problem.L_f > 0.0) || !std::isfinite(problem.L_f)) {
    throw ConfigError("L_f must be positive and finite");
  }
  if (!(problem.mu >= 0.0) || problem.mu > problem.L_f) {
    throw ConfigError("mu must satisfy 0 <= mu <= L_f");
  }
  if (problem.x_star && problem.x_star->size() != problem.dim) {
    throw ConfigError("x_star has the wrong dimension");
  }
}

Evaluation evaluate(const SmoothProblem& problem, const Vector& x) {
  if (x.size() != problem.dim) {
    throw ConfigError("evaluate: point has dimension " + std::to_string(x.size()) +
                      ", problem has " + std::to_string(problem.dim));
  }
  if (const auto i = first_non_finite(x); i >= 0) {
    throw NumericError("evaluate: non-finite input at index " + std::to_string(i));
  }
  Evaluation out{problem.value(x), problem.gradient(x)};
  if (!std::isfinite(out.value)) throw NumericError("evaluate: non-finite value");
  if (out.gradient.size() != problem.dim) {
    throw ConfigError("evaluate: gradient has the wrong dimension");
  }
  if (const auto i = first_non_finite(out.gradient); i >= 0) {
    throw NumericError("evaluate: non-finite gradient at index " + std::to_string(i));
  }
  return out;
}

InexactnessConstants inexactness_constants(double delta, double L_f, double mu) {
  if (!(delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (!(L_f > 0.0)) throw ConfigError("L_f must be > 0");
  if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
  InexactnessConstants c;
  const double d2 = delta * delta;
  c.delta1 = delta;
  c.delta2 = d2 / (2.0 * L_f);
  if (mu > 0.0) {
    c.delta3 = d2 / mu;
    c.delta_model1 = d2 / (2.0 * (2.0 * L_f)) + d2 / mu;
  }
  return c;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::stm: return "stm";
    case Algorithm::stm2: return "stm2";
    case Algorithm::gd: return "gd";
    case Algorithm::tmm: return "tmm";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "stm") return Algorithm::stm;
  if (s == "stm2") return Algorithm::stm2;
  if (s == "gd") return Algorithm::gd;
  if (s == "tmm") return Algorithm::tmm;
  throw ConfigError("unknown algorithm '" + s + "'");
}

SolverConfig make_solver_config(const SmoothProblem& problem, Algorithm algorithm,
                                int iterations, int tau) {
  SolverConfig c;
  c.algorithm = algorithm;
  c.tau = tau;
  c.L_f = problem.L_f;
  c.L = 2.0 * problem.L_f;
  c.iterations = iterations;
  return c;
}

void validate(const SolverConfig& config, const SmoothProblem& problem) {
  if (config.tau != 1 && config.tau != 2) throw ConfigError("tau must be 1 or 2");
  if (config.tau == 2 && !(problem.mu > 0.0)) {
    throw ConfigError("tau = 2 requires mu > 0");
  }
  if (config.L_f != problem.L_f) {
    throw ConfigError("config L_f does not match the problem");
  }
  if (config.L != 2.0 * config.L_f) throw ConfigError("config L must equal 2 L_f");
  if (config.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (config.x_start && config.x_start->size() != problem.dim) {
    throw ConfigError("x_start has the wrong dimension");
  }
  validate(config.set, problem.dim);
}

double mu_tau(double mu, int tau) { return tau == 2 ? 0.5 * mu : mu; }

}  // namespace noisy_stm
