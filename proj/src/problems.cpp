#include "noisy_stm/problems.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/QR>

#include "noisy_stm/rng.hpp"

namespace noisy_stm {

namespace {

// y = A_m x for the (2, -1) tridiagonal block on the first m coordinates.
Vector tridiag_apply(const Vector& x, Eigen::Index m) {
  Vector y = Vector::Zero(x.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    double v = 2.0 * x[i];
    if (i > 0) v -= x[i - 1];
    if (i + 1 < m) v -= x[i + 1];
    y[i] = v;
  }
  return y;
}

// top eigenvalue of the m x m (2, -1) matrix
double tridiag_lambda_max(Eigen::Index m) {
  const double mm = static_cast<double>(m);
  return 2.0 - 2.0 * std::cos(mm * std::numbers::pi / (mm + 1.0));
}

double tridiag_lambda_min(Eigen::Index m) {
  const double mm = static_cast<double>(m);
  return 2.0 - 2.0 * std::cos(std::numbers::pi / (mm + 1.0));
}

void check_against(const EigenEstimate& est, double exact, const std::string& what) {
  const double scale = std::max(std::abs(exact), tol::kAbsFloor);
  if (std::abs(est.value - exact) > 1e-6 * scale) {
    throw NumericError(what + ": power iteration gives " + std::to_string(est.value) +
                       ", closed form " + std::to_string(exact));
  }
}

}  // namespace

EigenEstimate power_iteration(const MatVec& op, Eigen::Index n, double tol, int max_iter) {
  if (n < 1) throw ConfigError("power iteration needs n >= 1");
  Rng rng(0x5eedULL);
  Vector v = rng.unit_sphere(n);
  EigenEstimate est;
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = op(v);
    const double value = v.dot(w);
    est.value = value;
    est.residual = (w - value * v).norm();
    est.iterations = it;
    const double wn = w.norm();
    if (wn == 0.0) return est;   // zero operator
    if (est.residual <= tol * std::max(std::abs(value), tol::kAbsFloor)) return est;
    v = w / wn;
  }
  return est;
}

EigenEstimate smallest_eigenvalue(const MatVec& op, Eigen::Index n, double lambda_max,
                                  double tol, int max_iter) {
  const MatVec shifted = [&](const Vector& x) -> Vector { return lambda_max * x - op(x); };
  EigenEstimate top = power_iteration(shifted, n, tol, max_iter);
  top.value = lambda_max - top.value;
  return top;
}

Vector solve_tridiagonal(const Vector& diag, const Vector& off, const Vector& rhs) {
  const Eigen::Index n = diag.size();
  if (n < 1 || rhs.size() != n || off.size() != std::max<Eigen::Index>(n - 1, 0)) {
    throw ConfigError("tridiagonal solve: inconsistent sizes");
  }
  Vector c(n), d(n);
  double denom = diag[0];
  if (denom == 0.0) throw NumericError("tridiagonal solve: zero pivot at index 0");
  c[0] = n > 1 ? off[0] / denom : 0.0;
  d[0] = rhs[0] / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag[i] - off[i - 1] * c[i - 1];
    if (denom == 0.0) throw NumericError("tridiagonal solve: zero pivot at index " + std::to_string(i));
    c[i] = i + 1 < n ? off[i] / denom : 0.0;
    d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
  }
  Vector x(n);
  x[n - 1] = d[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

SmoothProblem nesterov_degenerate(Eigen::Index n, Eigen::Index k, double L) {
  if (n < 1) throw ConfigError("nesterov_degenerate: n must be >= 1");
  if (k < 1 || k > n) throw ConfigError("nesterov_degenerate: need 1 <= k <= n");
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("nesterov_degenerate: L must be > 0");
  const double q = L / 4.0;
  SmoothProblem p;
  p.name = "nesterov_degenerate";
  p.dim = n;
  p.value = [q, k](const Vector& x) {
    double s = x[0] * x[0] + x[k - 1] * x[k - 1];
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
      const double d = x[j] - x[j + 1];
      s += d * d;
    }
    return 0.5 * q * s - q * x[0];
  };
  p.gradient = [q, k](const Vector& x) {
    Vector g = q * tridiag_apply(x, k);
    g[0] -= q;
    return g;
  };
  p.L_f = q * tridiag_lambda_max(k);
  p.mu = 0.0;
  Vector xs = Vector::Zero(n);
  for (Eigen::Index j = 1; j <= k; ++j) {
    xs[j - 1] = 1.0 - static_cast<double>(j) / static_cast<double>(k + 1);
  }
  p.f_star = p.value(xs);
  p.radius = xs.norm();
  p.x_star = std::move(xs);
  const auto est = power_iteration([q, k](const Vector& x) -> Vector { return q * tridiag_apply(x, k); }, n);
  check_against(est, p.L_f, "nesterov_degenerate L_f");
  return p;
}

SmoothProblem nesterov_strongly_convex(Eigen::Index n, double mu, double chi) {
  if (n < 2) throw ConfigError("nesterov_strongly_convex: n must be >= 2");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("nesterov_strongly_convex: mu must be > 0");
  if (!(chi > 1.0) || !std::isfinite(chi)) throw ConfigError("nesterov_strongly_convex: chi must be > 1");
  const double c = mu * (chi - 1.0) / 4.0;
  const MatVec hess = [c, mu, n](const Vector& x) -> Vector {
    return c * tridiag_apply(x, n) + mu * x;
  };
  SmoothProblem p;
  p.name = "nesterov_strongly_convex";
  p.dim = n;
  p.value = [hess, c](const Vector& x) { return 0.5 * x.dot(hess(x)) - c * x[0]; };
  p.gradient = [hess, c](const Vector& x) {
    Vector g = hess(x);
    g[0] -= c;
    return g;
  };
  p.L_f = c * tridiag_lambda_max(n) + mu;
  p.mu = c * tridiag_lambda_min(n) + mu;
  Vector diag = Vector::Constant(n, 2.0 * c + mu);
  Vector off = Vector::Constant(n - 1, -c);
  Vector rhs = Vector::Zero(n);
  rhs[0] = c;
  Vector xs = solve_tridiagonal(diag, off, rhs);
  p.f_star = -0.5 * c * xs[0];
  p.radius = xs.norm();
  p.x_star = std::move(xs);
  const auto top = power_iteration(hess, n);
  check_against(top, p.L_f, "nesterov_strongly_convex L_f");
  const auto bottom = smallest_eigenvalue(hess, n, top.value);
  check_against(bottom, p.mu, "nesterov_strongly_convex mu");
  return p;
}

SmoothProblem diagonal_quadratic(const Vector& lambda) {
  const Eigen::Index n = lambda.size();
  if (n < 1) throw ConfigError("diagonal_quadratic: empty spectrum");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lambda[i] >= 0.0) || !std::isfinite(lambda[i])) {
      throw ConfigError("diagonal_quadratic: lambda must be finite and >= 0");
    }
    if (i > 0 && lambda[i] < lambda[i - 1]) {
      throw ConfigError("diagonal_quadratic: lambda must be sorted nondecreasing");
    }
  }
  if (!(lambda[n - 1] > 0.0)) throw ConfigError("diagonal_quadratic: all eigenvalues are zero");
  SmoothProblem p;
  p.name = "diagonal_quadratic";
  p.dim = n;
  p.value = [lambda](const Vector& x) { return 0.5 * (lambda.array() * x.array().square()).sum(); };
  p.gradient = [lambda](const Vector& x) -> Vector { return lambda.cwiseProduct(x); };
  p.L_f = lambda[n - 1];
  p.mu = lambda[0];
  p.x_star = Vector::Zero(n);
  p.f_star = 0.0;
  p.radius = 0.0;
  return p;
}

SmoothProblem least_squares(const Matrix& A, const Vector& b) {
  if (A.rows() < 1 || A.cols() < 1) throw ConfigError("least_squares: empty matrix");
  if (b.size() != A.rows()) throw ConfigError("least_squares: b has the wrong length");
  if (!A.allFinite() || !b.allFinite()) throw ConfigError("least_squares: non-finite data");
  const Eigen::Index n = A.cols();
  const MatVec gram = [A](const Vector& x) -> Vector { return A.transpose() * (A * x); };
  const auto top = power_iteration(gram, n);
  const auto bottom = smallest_eigenvalue(gram, n, top.value);
  const double cond = bottom.value > 0.0 ? top.value / bottom.value : INFINITY;
  if (A.rows() < n || !(bottom.value > 1e-12 * top.value)) {
    throw ConfigError("least_squares: A is rank deficient (condition estimate " +
                      std::to_string(cond) + ")");
  }
  SmoothProblem p;
  p.name = "least_squares";
  p.dim = n;
  p.value = [A, b](const Vector& x) { return 0.5 * (A * x - b).squaredNorm(); };
  p.gradient = [A, b](const Vector& x) -> Vector { return A.transpose() * (A * x - b); };
  p.L_f = top.value;
  p.mu = std::min(bottom.value, top.value);
  Vector xs = A.colPivHouseholderQr().solve(b);
  p.f_star = p.value(xs);
  p.radius = xs.norm();
  p.x_star = std::move(xs);
  return p;
}

std::string to_string(ProblemFamily f) {
  switch (f) {
    case ProblemFamily::nesterov_degenerate: return "nesterov_degenerate";
    case ProblemFamily::nesterov_strongly_convex: return "nesterov_strongly_convex";
    case ProblemFamily::diagonal_quadratic: return "diagonal_quadratic";
    case ProblemFamily::least_squares: return "least_squares";
  }
  return "?";
}

ProblemFamily problem_family_from_string(const std::string& s) {
  if (s == "nesterov_degenerate") return ProblemFamily::nesterov_degenerate;
  if (s == "nesterov_strongly_convex") return ProblemFamily::nesterov_strongly_convex;
  if (s == "diagonal_quadratic") return ProblemFamily::diagonal_quadratic;
  if (s == "least_squares") return ProblemFamily::least_squares;
  throw ConfigError("unknown problem family '" + s + "'");
}

SmoothProblem build_problem(const ProblemSpec& spec) {
  switch (spec.family) {
    case ProblemFamily::nesterov_degenerate:
      return nesterov_degenerate(spec.n, spec.k.value_or(std::max<Eigen::Index>(1, spec.n / 2)),
                                 spec.L);
    case ProblemFamily::nesterov_strongly_convex:
      return nesterov_strongly_convex(spec.n, spec.mu, spec.chi);
    case ProblemFamily::diagonal_quadratic:
      return diagonal_quadratic(spec.lambda);
    case ProblemFamily::least_squares:
      return least_squares(spec.A, spec.b);
  }
  throw ConfigError("unknown problem family");
}

}  // namespace noisy_stm
