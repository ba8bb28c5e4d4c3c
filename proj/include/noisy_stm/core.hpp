#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "noisy_stm/geometry.hpp"
#include "noisy_stm/types.hpp"

namespace noisy_stm {

/// Smooth convex objective with its constants.
///
/// `L_f` is the Lipschitz constant of the gradient and `mu` the strong
/// convexity modulus (0 for merely convex problems). The optional fields are
/// filled when the family knows them in closed form.
struct SmoothProblem {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  double L_f = 1.0;
  double mu = 0.0;
  std::optional<Vector> x_star;
  std::optional<double> f_star;
  std::optional<double> radius;
};

/// Throws ConfigError unless 0 <= mu <= L_f, L_f > 0, dim >= 1 and both
/// callables are set.
void validate(const SmoothProblem& problem);

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

/// Value and gradient at one point. Dimension mismatch raises ConfigError;
/// a non-finite input or output raises NumericError naming the index.
Evaluation evaluate(const SmoothProblem& problem, const Vector& x);

/// Error constants of the inexact upper/lower models for an oracle with
/// absolute error delta.
struct InexactnessConstants {
  double delta1 = 0.0;                  // linear lower-model term
  double delta2 = 0.0;                  // delta^2 / (2 L_f)
  std::optional<double> delta3;         // delta^2 / mu, only for mu > 0
  std::optional<double> delta_model1;   // delta^2 / (2 L) + delta^2 / mu
};

InexactnessConstants inexactness_constants(double delta, double L_f, double mu);

/// One row of a solver trace.
struct IterRecord {
  int k = 0;
  double f_x = 0.0;                     // f(x_k), exact
  std::optional<double> f_gap;          // f(x_k) - f*
  double grad_norm = 0.0;               // ||grad f(x_k)||
  std::optional<double> dist_to_opt;    // ||x_k - x*||
  double A_k = 0.0;
  double alpha_k = 0.0;
  double noise_norm = 0.0;              // realized ||g~ - grad f|| at the query point
  std::optional<double> psi_min;        // psi_k(z_k), STM only
  double weighted_path = 0.0;           // sum_{j<=k} alpha_j ||xt_j - z_{j-1}||
  double adaptive_term = 0.0;           // delta1 * weighted_path
  double step_gap = 0.0;                // ||xt_k - z_{k-1}|| (0 at k = 0)
  std::optional<double> r_tilde;        // running max distance of all iterates to x*
  std::optional<double> f_query;        // f at the oracle point (xt_k or y_k)
};

/// Iterates kept on request for identity and invariant checks.
struct IterateSnapshot {
  Vector x;
  Vector z;       // z_k for STM, u_k for STM2, momentum state for TMM
  Vector query;   // xt_k for STM, y_k for STM2
  Vector g;       // oracle output at `query`
};

struct Trace {
  std::string algorithm;
  int tau = 1;
  double L = 0.0;        // internal constant 2 L_f
  double mu_tau = 0.0;
  std::vector<IterRecord> records;
  std::vector<IterateSnapshot> iterates;
  long long oracle_calls = 0;
  bool aborted = false;          // non-finite state, partial trace kept
  bool diverged = false;         // gradient descent divergence guard
  bool stalled = false;          // restart without progress
  bool stopping_available = false;
  std::optional<int> stopped_at;
  std::vector<int> restart_indices;
  std::string abort_reason;
  Vector final_x;
};

enum class Algorithm { stm, stm2, gd, tmm };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

enum class StoppingVariant { theorem, adaptive };

struct StoppingConfig {
  StoppingVariant variant = StoppingVariant::theorem;
  double eps = 1e-3;
  double R = 1.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  std::optional<double> f_star;
};

struct RestartSchedule {
  enum class Kind { fixed_period, halving };
  Kind kind = Kind::fixed_period;
  int period = 100;          // inner budget per epoch (cap for halving)
  int max_restarts = 50;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::stm;
  int tau = 1;
  double L_f = 1.0;
  double L = 2.0;            // always 2 * L_f, see make_solver_config
  int iterations = 100;
  std::uint64_t seed = 0;
  FeasibleSet set = WholeSpace{};
  std::optional<StoppingConfig> stopping;
  std::optional<RestartSchedule> restart;
  std::optional<Vector> x_start;   // zeros when absent
  std::optional<double> step;      // gradient descent step, 1/L_f by default
  bool keep_iterates = false;
};

/// Config bound to a problem: copies L_f and stores L = 2 L_f.
SolverConfig make_solver_config(const SmoothProblem& problem, Algorithm algorithm,
                                int iterations, int tau = 1);

/// Throws ConfigError when L != 2 L_f, tau is not 1 or 2, or tau = 2 with mu = 0.
void validate(const SolverConfig& config, const SmoothProblem& problem);

/// mu_1 = mu, mu_2 = mu / 2.
double mu_tau(double mu, int tau);

}  // namespace noisy_stm
