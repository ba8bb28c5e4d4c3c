#pragma once

#include <optional>

namespace noisy_stm {

/// Coupling sequence of the accelerated methods. `L` is always the internal
/// constant 2 L_f.
struct SequenceState {
  int k = 0;
  double A = 0.0;
  double alpha = 0.0;
  double L = 0.0;
  double mu_tau = 0.0;

  /// A_0 = alpha_0 = 1 / L.
  static SequenceState initial(double L, double mu_tau);
  SequenceState next() const;
};

/// Positive root of (1 + mu_tau A)(A + alpha) = L alpha^2.
double next_alpha(double L, double mu_tau, double A_prev);

/// |(1 + mu_tau A)(A + alpha) - L alpha^2| / (L alpha^2).
double recurrence_residual(double L, double mu_tau, double A_prev, double alpha);

struct GrowthFactor {
  double lambda = 1.0;
  bool degenerate = false;   // mu_tau == 0
};

/// lambda = 1 + theta / 2 + sqrt(theta), theta = mu_tau / L.
GrowthFactor growth_factor(double L, double mu_tau);

/// Upper bound on (1 / A_k) sum_{j<=k} A_j.
double partial_sum_bound(double L, double mu_tau, int k);

/// Iteration cap of the stopping rule, ceil(sqrt(2 L R^2 / eps)).
int n_max(double L, double R, double eps);

struct Budget {
  double delta_max = 0.0;
  int N = 1;
  std::optional<double> mu;   // regularization weight, when one is chosen
};

/// tau = 2 model on a strongly convex problem.
Budget budget_strongly_convex(double L, double mu, double R, double eps);

/// Convex problem regularized with mu = (2/3) eps / R^2.
Budget budget_regularized(double L, double R, double eps);

/// Linear system A x = b solved to residual eps1 through the stopping rule;
/// the function-gap target is eps1^2 / 2.
Budget budget_linear_system(double L, double R, double R_star, double eps1);

/// Largest relative noise level covered by the STM2 rate, mu_2 / (7 L).
double stm2_alpha_threshold(double L, double mu);

/// Relative noise level of the triple momentum guarantee for chi = L / mu.
double tmm_alpha_threshold(double L, double mu);

struct TauComparison {
  int preferred_tau = 1;
  double term_tau1 = 0.0;
  double term_tau2 = 0.0;
};

/// Compares the accumulated noise terms of the two lower models. Ties pick
/// tau = 1.
TauComparison compare_tau(double delta, double L, double mu, double R_tilde);

}  // namespace noisy_stm
