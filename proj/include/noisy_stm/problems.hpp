#pragma once

#include <functional>
#include <optional>
#include <string>

#include "noisy_stm/core.hpp"

namespace noisy_stm {

/// Symmetric positive semidefinite operator given by its action.
using MatVec = std::function<Vector(const Vector&)>;

struct EigenEstimate {
  double value = 0.0;
  double residual = 0.0;   // ||M v - value v|| for the final unit vector v
  int iterations = 0;
};

/// Largest eigenvalue by power iteration from a fixed pseudo-random start.
/// Stops once the residual drops below tol * |value| or after max_iter steps.
EigenEstimate power_iteration(const MatVec& op, Eigen::Index n, double tol = 1e-10,
                              int max_iter = 200000);

/// Smallest eigenvalue of a PSD operator: power iteration on (shift I - M)
/// with shift = the largest eigenvalue.
EigenEstimate smallest_eigenvalue(const MatVec& op, Eigen::Index n, double lambda_max,
                                  double tol = 1e-10, int max_iter = 200000);

/// f(x) = (L/8)(x_1^2 + sum_{j=1}^{k-1} (x_j - x_{j+1})^2 + x_k^2) - (L/4) x_1.
/// Minimizer x*_j = 1 - j/(k+1) for j <= k and 0 afterwards. L_f is the exact
/// top eigenvalue (L/4)(2 - 2 cos(k pi/(k+1))), which is below L.
SmoothProblem nesterov_degenerate(Eigen::Index n, Eigen::Index k, double L);

/// f(x) = 1/2 x^T H x - c x_1 with H = (mu (chi - 1)/4) A + mu I, c = mu (chi - 1)/4
/// and A the (2, -1) tridiagonal matrix. L_f and mu are the exact extreme
/// eigenvalues of H, which lie inside [mu, mu chi].
SmoothProblem nesterov_strongly_convex(Eigen::Index n, double mu, double chi);

/// f(x) = 1/2 sum lambda_i x_i^2 with lambda sorted nondecreasing.
SmoothProblem diagonal_quadratic(const Vector& lambda);

/// f(x) = 1/2 ||A x - b||^2. A must have full column rank.
SmoothProblem least_squares(const Matrix& A, const Vector& b);

/// Solves a symmetric tridiagonal system (diag, off) x = rhs by the Thomas
/// algorithm. `off` has n - 1 entries.
Vector solve_tridiagonal(const Vector& diag, const Vector& off, const Vector& rhs);

enum class ProblemFamily { nesterov_degenerate, nesterov_strongly_convex, diagonal_quadratic,
                           least_squares };

std::string to_string(ProblemFamily f);
ProblemFamily problem_family_from_string(const std::string& s);

struct ProblemSpec {
  ProblemFamily family = ProblemFamily::nesterov_degenerate;
  Eigen::Index n = 100;
  std::optional<Eigen::Index> k;    // defaults to n / 2
  double L = 2.0;                   // nesterov_degenerate
  double mu = 0.1;                  // nesterov_strongly_convex
  double chi = 10.0;                // nesterov_strongly_convex
  Vector lambda;                    // diagonal_quadratic
  Matrix A;                         // least_squares
  Vector b;                         // least_squares
};

SmoothProblem build_problem(const ProblemSpec& spec);

}  // namespace noisy_stm
