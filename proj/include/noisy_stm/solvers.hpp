#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisy_stm/core.hpp"
#include "noisy_stm/oracles.hpp"
#include "noisy_stm/rng.hpp"

namespace noisy_stm {

/// Extra per-record stop test, used by the restart driver.
using StopHook = std::function<bool(const IterRecord&)>;

/// Similar triangles method. The estimating function is kept as
/// psi(x) = (c/2)||x - v||^2 + m, so z_k = project(v) and psi_k(z_k) is O(n).
Trace stm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config, Rng& rng, const StopHook& hook = {});
Trace stm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config);

/// Variant for relative noise with mu_2 = mu / 2 in the sequence and u-step.
Trace stm2_run(const SmoothProblem& problem, const GradientOracle& oracle,
               const SolverConfig& config, Rng& rng, const StopHook& hook = {});
Trace stm2_run(const SmoothProblem& problem, const GradientOracle& oracle,
               const SolverConfig& config);

/// x_k = x_{k-1} - h g(x_{k-1}); h = config.step or 1 / L_f.
Trace gd_run(const SmoothProblem& problem, const GradientOracle& oracle,
             const SolverConfig& config, Rng& rng, const StopHook& hook = {});
Trace gd_run(const SmoothProblem& problem, const GradientOracle& oracle,
             const SolverConfig& config);

/// Triple momentum baseline with rho = 1 - 1/sqrt(L_f / mu).
Trace tmm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config, Rng& rng, const StopHook& hook = {});
Trace tmm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config);

/// Runs config.algorithm, through restart_run when config.restart is set.
Trace solve(const SmoothProblem& problem, const GradientOracle& oracle,
            const SolverConfig& config, Rng& rng);
Trace solve(const SmoothProblem& problem, const GradientOracle& oracle,
            const SolverConfig& config);

/// Restarts the inner method from its last iterate. Epochs last
/// schedule.period steps (halving also ends an epoch once
/// f(x_k) - f* <= (f(x_start) - f*) / 2); the last allowed epoch takes the
/// remaining budget. The RNG stream carries over between epochs.
Trace restart_run(const SmoothProblem& problem, const GradientOracle& oracle,
                  const SolverConfig& config, Rng& rng);

struct CertificateReport {
  bool available = false;
  std::vector<bool> ok;        // one entry per record
  std::optional<int> first_failure;
  double worst_slack = 0.0;    // max (lhs - rhs) / scale, at most 1e-8 when all pass
  std::string reason;          // set when unavailable

  bool all_ok() const { return available && !first_failure.has_value(); }
};

/// A_k f(x_k) <= psi_k(z_k) + delta2 sum_{j<=k} A_j + extra, where
/// extra = delta1 sum_{j=1..k} alpha_j ||xt_j - z_{j-1}|| for tau = 1 and
/// delta3 sum_{j<k} A_j for tau = 2. Slack 1e-8 relative.
CertificateReport stm_certificate(const Trace& trace, double delta1, double delta2,
                                  std::optional<double> delta3 = std::nullopt);

struct Stm2CertificateReport {
  CertificateReport claim;
  CertificateReport theorem;   // available only when alpha <= mu_2 / (7 L)
};

/// Recursive bound on Delta_k = f(y_k) - f* and, under the threshold on
/// alpha, the explicit exponential rate. `L` is the internal 2 L_f.
Stm2CertificateReport stm2_certificate(const Trace& trace, double L, double mu, double R,
                                       double alpha, double f0_gap);

/// Right-hand side of the stopping test at one iteration.
double stopping_rhs(const StoppingConfig& cfg, double A_k, double sum_A, double weighted_path);

/// fired iff f_gap <= stopping_rhs(...). Inclusive.
bool stopping_check(const StoppingConfig& cfg, double f_gap, double A_k, double sum_A,
                    double weighted_path);

struct BoundCurve {
  std::optional<std::vector<double>> tau1;   // mu > 0 only
  std::optional<std::vector<double>> tau2;   // mu > 0 and delta3 known
  std::vector<double> mu0;                   // entry 0 is NaN (undefined at N = 0)
};

/// Right-hand sides of the convergence bounds at N = 0..N. `r_tilde` holds
/// one value per N (or a single value used throughout).
BoundCurve theoretical_bounds(double L, double mu, double R, double delta1, double delta2,
                              std::optional<double> delta3, std::span<const double> r_tilde,
                              int N);

struct Regularized {
  SmoothProblem problem;
  double mu_reg = 0.0;
  double L_f_coarse = 0.0;   // 2 L_f, the cruder constant
};

/// f(x) + (mu_reg / 2)||x - x0||^2 with mu_reg = (2/3) eps / R^2.
Regularized regularize(const SmoothProblem& problem, const Vector& x0, double eps, double R);

/// R~_k column from a trace (needs x* and kept iterates or r_tilde records).
std::vector<double> r_tilde_column(const Trace& trace);

}  // namespace noisy_stm
