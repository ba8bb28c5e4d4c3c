#include "noisy_stm/sequences.hpp"

#include <algorithm>
#include <cmath>

#include "noisy_stm/types.hpp"

namespace noisy_stm {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be positive and finite");
  }
}

// ceil that ignores representation noise just above an integer
int ceil_count(double v) {
  if (!std::isfinite(v)) throw NumericError("iteration count is not finite");
  const double c = std::ceil(v - 1e-12 * std::max(1.0, std::abs(v)));
  return std::max(1, static_cast<int>(c));
}

}  // namespace

SequenceState SequenceState::initial(double L, double mu_tau) {
  require_positive(L, "L");
  return {0, 1.0 / L, 1.0 / L, L, mu_tau};
}

SequenceState SequenceState::next() const {
  const double a = next_alpha(L, mu_tau, A);
  return {k + 1, A + a, a, L, mu_tau};
}

double next_alpha(double L, double mu_tau, double A_prev) {
  require_positive(L, "L");
  if (!(mu_tau >= 0.0)) throw ConfigError("mu_tau must be >= 0");
  if (!(A_prev >= 0.0)) throw ConfigError("A_prev must be >= 0");
  // alpha = b/2 + sqrt(b^2/4 + c) with b, c >= 0, so no cancellation
  const double s = 1.0 + mu_tau * A_prev;
  const double half_b = s / (2.0 * L);
  const double c = A_prev * s / L;
  return half_b + std::sqrt(half_b * half_b + c);
}

double recurrence_residual(double L, double mu_tau, double A_prev, double alpha) {
  const double lhs = (1.0 + mu_tau * A_prev) * (A_prev + alpha);
  const double rhs = L * alpha * alpha;
  return std::abs(lhs - rhs) / rhs;
}

GrowthFactor growth_factor(double L, double mu_tau) {
  require_positive(L, "L");
  if (!(mu_tau >= 0.0)) throw ConfigError("mu_tau must be >= 0");
  if (mu_tau == 0.0) return {1.0, true};
  const double theta = mu_tau / L;
  const double lambda = 1.0 + 0.5 * theta + std::sqrt(theta);
  if (lambda < std::exp(0.5 * std::sqrt(theta))) {
    throw NumericError("growth factor below its exponential lower bound");
  }
  return {lambda, false};
}

double partial_sum_bound(double L, double mu_tau, int k) {
  require_positive(L, "L");
  if (k < 1) throw ConfigError("partial_sum_bound needs k >= 1");
  if (mu_tau > 0.0) return 1.0 + std::sqrt(L / mu_tau);
  return static_cast<double>(k) + 1.0;
}

int n_max(double L, double R, double eps) {
  require_positive(eps, "eps");
  require_positive(L, "L");
  require_positive(R, "R");
  return ceil_count(std::sqrt(2.0 * L * R * R / eps));
}

Budget budget_strongly_convex(double L, double mu, double R, double eps) {
  require_positive(L, "L");
  require_positive(mu, "mu");
  require_positive(R, "R");
  require_positive(eps, "eps");
  // noise term ((L + mu) / sqrt(mu^3 L)) (sqrt2 + 1) delta^2 <= eps / 2
  const double factor = (L + mu) / std::sqrt(mu * mu * mu * L) * (std::sqrt(2.0) + 1.0);
  Budget b;
  b.delta_max = std::sqrt(eps / (2.0 * factor));
  // L R^2 exp(-sqrt(mu / (2L)) N / 2) <= eps / 2
  const double log_term = std::max(0.0, std::log(2.0 * L * R * R) + std::log(1.0 / eps));
  b.N = ceil_count(2.0 * std::sqrt(2.0 * L / mu) * log_term);
  return b;
}

Budget budget_regularized(double L, double R, double eps) {
  require_positive(L, "L");
  require_positive(R, "R");
  require_positive(eps, "eps");
  Budget b;
  b.mu = (2.0 / 3.0) * eps / (R * R);
  b.delta_max = std::pow(2.0 / 243.0, 0.25) / std::sqrt(1.0 + std::sqrt(2.0 * L + 4.0)) *
                std::pow(R, -1.5) * std::pow(eps, 1.25);
  const double first = std::sqrt(12.0 * L + 24.0) * R * std::max(0.0, std::log(2.0 * L * R * R));
  const double second =
      2.0 * std::sqrt(2.0 * L + 4.0) / std::sqrt(eps) * std::max(0.0, std::log(1.0 / eps));
  b.N = ceil_count(first + second);
  return b;
}

Budget budget_linear_system(double L, double R, double R_star, double eps1) {
  require_positive(L, "L");
  require_positive(R, "R");
  require_positive(R_star, "R_star");
  require_positive(eps1, "eps1");
  const double eps = 0.5 * eps1 * eps1;
  const double C = std::min(std::pow(L, 0.25) / (6.0 * std::sqrt(3.0 * R)), 1.0 / (9.0 * R_star));
  Budget b;
  b.delta_max = C * eps;
  b.N = static_cast<int>(std::lround(2.0 * std::sqrt(3.0 * L * R * R) / eps1)) + 1;
  return b;
}

double stm2_alpha_threshold(double L, double mu) {
  require_positive(L, "L");
  require_positive(mu, "mu");
  return 0.5 * mu / (7.0 * L);
}

double tmm_alpha_threshold(double L, double mu) {
  require_positive(L, "L");
  require_positive(mu, "mu");
  const double chi = L / mu;
  const double s = std::sqrt(chi);
  return (s + 1.0) / (4.0 * chi - 3.0 * s + 1.0);
}

TauComparison compare_tau(double delta, double L, double mu, double R_tilde) {
  require_positive(L, "L");
  require_positive(mu, "mu");
  if (!(delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (!(R_tilde >= 0.0)) throw ConfigError("R_tilde must be >= 0");
  const double d2 = delta * delta / L;
  const double d3 = delta * delta / mu;
  TauComparison c;
  c.term_tau1 = (1.0 + std::sqrt(L / mu)) * d2 + 3.0 * R_tilde * delta;
  c.term_tau2 = (1.0 + std::sqrt(L / (0.5 * mu))) * (d2 + d3);
  c.preferred_tau = c.term_tau2 < c.term_tau1 ? 2 : 1;
  return c;
}

}  // namespace noisy_stm
