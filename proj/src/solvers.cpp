#include "noisy_stm/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "noisy_stm/sequences.hpp"

namespace noisy_stm {

namespace {

constexpr double kCertSlack = 1e-8;
constexpr double kOverflow = 1e300;

// Shared bookkeeping for one run: exact diagnostics at x_k, R~_k, snapshots.
class Recorder {
 public:
  Recorder(const SmoothProblem& p, const SolverConfig& cfg, Trace& t, double delta1)
      : p_(p), keep_(cfg.keep_iterates), t_(t), delta1_(delta1) {}

  // Feeds every point produced at this step into R~.
  void touch(const Vector& pt) {
    if (p_.x_star) r_tilde_ = std::max(r_tilde_, (pt - *p_.x_star).norm());
  }

  IterRecord& add(int k, const Vector& x, double A, double alpha, double noise_norm,
                  double weighted_path, double step_gap, std::optional<double> f_query) {
    const Evaluation ev = evaluate(p_, x);
    IterRecord r;
    r.k = k;
    r.f_x = ev.value;
    if (p_.f_star) r.f_gap = ev.value - *p_.f_star;
    r.grad_norm = ev.gradient.norm();
    if (p_.x_star) {
      r.dist_to_opt = (x - *p_.x_star).norm();
      r.r_tilde = r_tilde_;
    }
    r.A_k = A;
    r.alpha_k = alpha;
    r.noise_norm = noise_norm;
    r.weighted_path = weighted_path;
    r.adaptive_term = delta1_ * weighted_path;
    r.step_gap = step_gap;
    r.f_query = f_query;
    t_.records.push_back(r);
    t_.final_x = x;
    return t_.records.back();
  }

  void snapshot(const Vector& x, const Vector& z, const Vector& q, const Vector& g) {
    if (keep_) t_.iterates.push_back({x, z, q, g});
  }

 private:
  const SmoothProblem& p_;
  bool keep_;
  Trace& t_;
  double delta1_;
  double r_tilde_ = 0.0;
};

double delta1_of(const SolverConfig& cfg, const GradientOracle& oracle) {
  if (cfg.stopping) return cfg.stopping->delta1;
  return absolute_delta(oracle).value_or(0.0);
}

void check_sequence(const SequenceState& s) {
  if (!std::isfinite(s.A) || !std::isfinite(s.alpha) || s.A > kOverflow) {
    throw NumericError("A_k overflow at k = " + std::to_string(s.k));
  }
}

void check_vector(const Vector& v, const char* what) {
  if (const auto i = first_non_finite(v); i >= 0) {
    throw NumericError(std::string(what) + ": non-finite component " + std::to_string(i));
  }
}

Vector start_point(const SmoothProblem& p, const SolverConfig& cfg) {
  return cfg.x_start.value_or(Vector::Zero(p.dim));
}

void abort_trace(Trace& t, const std::exception& e) {
  t.aborted = true;
  t.abort_reason = e.what();
}

// psi += a (f_q + <g, x - q> + mu/2 ||x - q||^2) in center form.
void psi_add(double& c, Vector& v, double& m, double a, double f_q, const Vector& g,
             const Vector& q, double mu) {
  const Vector vq = v - q;
  const Vector d = g + mu * vq;
  const double at_v = f_q + g.dot(vq) + 0.5 * mu * vq.squaredNorm();
  const double c_new = c + a * mu;
  m += a * at_v - a * a * d.squaredNorm() / (2.0 * c_new);
  v -= (a / c_new) * d;
  c = c_new;
}

std::optional<StoppingConfig> resolve_stopping(const SolverConfig& cfg, const SmoothProblem& p) {
  if (!cfg.stopping) return std::nullopt;
  StoppingConfig s = *cfg.stopping;
  if (!s.f_star) s.f_star = p.f_star;
  if (!(s.eps > 0.0)) throw ConfigError("stopping: eps must be > 0");
  if (!(s.R > 0.0)) throw ConfigError("stopping: R must be > 0");
  if (!(s.delta1 >= 0.0) || !(s.delta2 >= 0.0)) throw ConfigError("stopping: deltas must be >= 0");
  return s;
}

// Returns true when the run should end after this record.
bool after_record(Trace& t, const std::optional<StoppingConfig>& stop, const IterRecord& r,
                  double sum_A, const StopHook& hook) {
  if (stop && stop->f_star) {
    const double gap = r.f_x - *stop->f_star;
    if (stopping_check(*stop, gap, r.A_k, sum_A, r.weighted_path)) {
      t.stopped_at = r.k;
      return true;
    }
  }
  return hook && hook(r);
}

}  // namespace

Trace stm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config, Rng& rng, const StopHook& hook) {
  validate(problem);
  validate(config, problem);
  Trace t;
  t.algorithm = "stm";
  t.tau = config.tau;
  t.L = config.L;
  t.mu_tau = mu_tau(problem.mu, config.tau);
  const auto stop = resolve_stopping(config, problem);
  t.stopping_available = stop && stop->f_star.has_value();
  Recorder rec(problem, config, t, delta1_of(config, oracle));
  const double mt = t.mu_tau;

  try {
    SequenceState seq = SequenceState::initial(config.L, mt);
    Vector xt = start_point(problem, config);
    OracleSample s = query(oracle, problem, xt, rng);
    t.oracle_calls += s.calls;
    double c = 1.0, m = 0.0;
    Vector v = xt;
    psi_add(c, v, m, seq.alpha, s.value, s.gradient, xt, mt);
    Vector z = project(config.set, v);
    Vector x = z;
    check_vector(x, "stm x_0");
    double sum_A = seq.A;
    double weighted = 0.0;
    rec.touch(xt);
    rec.touch(z);
    IterRecord& r0 = rec.add(0, x, seq.A, seq.alpha, s.noise_norm, weighted, 0.0, s.value);
    r0.psi_min = m + 0.5 * c * (z - v).squaredNorm();
    rec.snapshot(x, z, xt, s.gradient);
    bool done = after_record(t, stop, r0, sum_A, hook);

    for (int k = 1; k <= config.iterations && !done; ++k) {
      const double A_prev = seq.A;
      seq = seq.next();
      check_sequence(seq);
      xt = (A_prev * x + seq.alpha * z) / seq.A;
      const double step_gap = (xt - z).norm();
      s = query(oracle, problem, xt, rng);
      t.oracle_calls += s.calls;
      psi_add(c, v, m, seq.alpha, s.value, s.gradient, xt, mt);
      check_vector(v, "stm psi center");
      z = project(config.set, v);
      x = (A_prev * x + seq.alpha * z) / seq.A;
      check_vector(x, "stm x_k");
      sum_A += seq.A;
      weighted += seq.alpha * step_gap;
      rec.touch(xt);
      rec.touch(z);
      rec.touch(x);
      IterRecord& r = rec.add(k, x, seq.A, seq.alpha, s.noise_norm, weighted, step_gap, s.value);
      r.psi_min = m + 0.5 * c * (z - v).squaredNorm();
      rec.snapshot(x, z, xt, s.gradient);
      done = after_record(t, stop, r, sum_A, hook);
    }
  } catch (const NumericError& e) {
    abort_trace(t, e);
  }
  return t;
}

Trace stm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config) {
  Rng rng(config.seed);
  return stm_run(problem, oracle, config, rng);
}

Trace stm2_run(const SmoothProblem& problem, const GradientOracle& oracle,
               const SolverConfig& config, Rng& rng, const StopHook& hook) {
  validate(problem);
  validate(config, problem);
  if (!(problem.mu > 0.0)) throw ConfigError("stm2 requires mu > 0");
  Trace t;
  t.algorithm = "stm2";
  t.tau = 2;
  t.L = config.L;
  t.mu_tau = 0.5 * problem.mu;
  const auto stop = resolve_stopping(config, problem);
  t.stopping_available = stop && stop->f_star.has_value();
  Recorder rec(problem, config, t, delta1_of(config, oracle));
  const double m2 = t.mu_tau;

  try {
    SequenceState seq = SequenceState::initial(config.L, m2);
    Vector x = start_point(problem, config);
    Vector u = x;
    Vector y = x;
    double sum_A = seq.A;
    rec.touch(x);
    const double f_y0 = evaluate(problem, y).value;
    IterRecord& r0 = rec.add(0, x, seq.A, seq.alpha, 0.0, 0.0, 0.0, f_y0);
    rec.snapshot(x, u, y, Vector::Zero(problem.dim));
    bool done = after_record(t, stop, r0, sum_A, hook);

    for (int k = 1; k <= config.iterations && !done; ++k) {
      const double A_prev = seq.A;
      seq = seq.next();
      check_sequence(seq);
      y = (A_prev * x + seq.alpha * u) / seq.A;
      const double step_gap = (y - u).norm();
      const OracleSample s = query(oracle, problem, y, rng);
      t.oracle_calls += s.calls;
      const Vector center = ((1.0 + m2 * A_prev) * u + m2 * seq.alpha * y - seq.alpha * s.gradient) /
                            (1.0 + m2 * seq.A);
      u = project(config.set, center);
      x = (A_prev * x + seq.alpha * u) / seq.A;
      check_vector(x, "stm2 x_k");
      sum_A += seq.A;
      rec.touch(y);
      rec.touch(u);
      rec.touch(x);
      IterRecord& r = rec.add(k, x, seq.A, seq.alpha, s.noise_norm, 0.0, step_gap, s.value);
      rec.snapshot(x, u, y, s.gradient);
      done = after_record(t, stop, r, sum_A, hook);
    }
  } catch (const NumericError& e) {
    abort_trace(t, e);
  }
  return t;
}

Trace stm2_run(const SmoothProblem& problem, const GradientOracle& oracle,
               const SolverConfig& config) {
  Rng rng(config.seed);
  return stm2_run(problem, oracle, config, rng);
}

Trace gd_run(const SmoothProblem& problem, const GradientOracle& oracle,
             const SolverConfig& config, Rng& rng, const StopHook& hook) {
  validate(problem);
  validate(config, problem);
  const double h = config.step.value_or(1.0 / problem.L_f);
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("gd step must be > 0");
  Trace t;
  t.algorithm = "gd";
  t.tau = config.tau;
  t.L = config.L;
  t.mu_tau = problem.mu;
  Recorder rec(problem, config, t, delta1_of(config, oracle));

  // divergence guard: 10 consecutive doublings of the gap (or |f| without f*)
  auto size_of = [&](const IterRecord& r) { return r.f_gap ? *r.f_gap : std::abs(r.f_x); };
  int doublings = 0;
  try {
    Vector x = start_point(problem, config);
    rec.touch(x);
    IterRecord* last = &rec.add(0, x, h, h, 0.0, 0.0, 0.0, std::nullopt);
    rec.snapshot(x, x, x, Vector::Zero(problem.dim));
    bool done = hook && hook(*last);
    for (int k = 1; k <= config.iterations && !done; ++k) {
      const OracleSample s = query(oracle, problem, x, rng);
      t.oracle_calls += s.calls;
      const Vector q = x;
      x = project(config.set, x - h * s.gradient);
      check_vector(x, "gd x_k");
      rec.touch(x);
      const double prev = size_of(*last);
      IterRecord& r = rec.add(k, x, (k + 1) * h, h, s.noise_norm, 0.0, (x - q).norm(), s.value);
      rec.snapshot(x, x, q, s.gradient);
      doublings = (prev > 0.0 && size_of(r) >= 2.0 * prev) ? doublings + 1 : 0;
      if (doublings >= 10) {
        t.diverged = true;
        t.aborted = true;
        t.abort_reason = "gradient descent diverged";
        break;
      }
      last = &r;
      done = hook && hook(r);
    }
  } catch (const NumericError& e) {
    abort_trace(t, e);
  }
  return t;
}

Trace gd_run(const SmoothProblem& problem, const GradientOracle& oracle,
             const SolverConfig& config) {
  Rng rng(config.seed);
  return gd_run(problem, oracle, config, rng);
}

Trace tmm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config, Rng& rng, const StopHook& hook) {
  validate(problem);
  validate(config, problem);
  if (!(problem.mu > 0.0)) throw ConfigError("tmm requires mu > 0");
  if (!is_whole_space(config.set)) throw ConfigError("tmm supports only the whole space");
  const double kappa = problem.L_f / problem.mu;
  const double rho = 1.0 - 1.0 / std::sqrt(kappa);
  const double step = (1.0 + rho) / problem.L_f;
  const double beta = rho * rho / (2.0 - rho);
  const double gamma = rho * rho / ((1.0 + rho) * (2.0 - rho));
  const double delta = rho * rho / (1.0 - rho * rho);

  Trace t;
  t.algorithm = "tmm";
  t.tau = config.tau;
  t.L = config.L;
  t.mu_tau = problem.mu;
  Recorder rec(problem, config, t, delta1_of(config, oracle));
  try {
    Vector xi = start_point(problem, config);
    Vector xi_prev = xi;
    rec.touch(xi);
    IterRecord& r0 = rec.add(0, xi, step, step, 0.0, 0.0, 0.0, std::nullopt);
    rec.snapshot(xi, xi, xi, Vector::Zero(problem.dim));
    bool done = hook && hook(r0);
    for (int k = 1; k <= config.iterations && !done; ++k) {
      const Vector y = (1.0 + gamma) * xi - gamma * xi_prev;
      const OracleSample s = query(oracle, problem, y, rng);
      t.oracle_calls += s.calls;
      Vector xi_next = (1.0 + beta) * xi - beta * xi_prev - step * s.gradient;
      check_vector(xi_next, "tmm xi_k");
      const Vector x = (1.0 + delta) * xi_next - delta * xi;
      xi_prev = std::move(xi);
      xi = std::move(xi_next);
      rec.touch(y);
      rec.touch(x);
      IterRecord& r = rec.add(k, x, (k + 1) * step, step, s.noise_norm, 0.0,
                              (xi - xi_prev).norm(), s.value);
      rec.snapshot(x, xi, y, s.gradient);
      done = hook && hook(r);
    }
  } catch (const NumericError& e) {
    abort_trace(t, e);
  }
  return t;
}

Trace tmm_run(const SmoothProblem& problem, const GradientOracle& oracle,
              const SolverConfig& config) {
  Rng rng(config.seed);
  return tmm_run(problem, oracle, config, rng);
}

namespace {

Trace run_inner(const SmoothProblem& problem, const GradientOracle& oracle,
                const SolverConfig& config, Rng& rng, const StopHook& hook) {
  switch (config.algorithm) {
    case Algorithm::stm: return stm_run(problem, oracle, config, rng, hook);
    case Algorithm::stm2: return stm2_run(problem, oracle, config, rng, hook);
    case Algorithm::gd: return gd_run(problem, oracle, config, rng, hook);
    case Algorithm::tmm: return tmm_run(problem, oracle, config, rng, hook);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace

Trace restart_run(const SmoothProblem& problem, const GradientOracle& oracle,
                  const SolverConfig& config, Rng& rng) {
  if (!config.restart) throw ConfigError("restart_run needs a restart schedule");
  const RestartSchedule sched = *config.restart;
  if (sched.period < 1) throw ConfigError("restart period must be >= 1");
  if (sched.max_restarts < 0) throw ConfigError("max_restarts must be >= 0");
  const bool halving = sched.kind == RestartSchedule::Kind::halving;
  if (halving && !problem.f_star) throw ConfigError("halving restarts need f*");

  Trace out;
  long long remaining = static_cast<long long>(config.iterations) + 1;   // records left
  Vector start = start_point(problem, config);
  int offset = 0;
  for (int epoch = 0; remaining > 0; ++epoch) {
    const bool last = epoch >= sched.max_restarts;
    const long long records = last ? remaining : std::min<long long>(sched.period + 1, remaining);
    SolverConfig inner = config;
    inner.restart.reset();
    inner.x_start = start;
    inner.iterations = static_cast<int>(records - 1);

    const double gap0 = problem.f_star ? evaluate(problem, start).value - *problem.f_star : 0.0;
    StopHook hook;
    if (halving && !last) {
      hook = [gap0](const IterRecord& r) { return r.k >= 1 && r.f_gap && *r.f_gap <= 0.5 * gap0; };
    }
    Trace t = run_inner(problem, oracle, inner, rng, hook);

    if (epoch == 0) {
      out.algorithm = t.algorithm;
      out.tau = t.tau;
      out.L = t.L;
      out.mu_tau = t.mu_tau;
      out.stopping_available = t.stopping_available;
    } else {
      out.restart_indices.push_back(offset);
    }
    for (IterRecord r : t.records) {
      r.k += offset;
      out.records.push_back(r);
    }
    for (auto& snap : t.iterates) out.iterates.push_back(std::move(snap));
    out.oracle_calls += t.oracle_calls;
    out.aborted = out.aborted || t.aborted;
    out.diverged = out.diverged || t.diverged;
    if (t.aborted) out.abort_reason = t.abort_reason;
    if (t.final_x.size() > 0) out.final_x = t.final_x;
    if (t.stopped_at) out.stopped_at = *t.stopped_at + offset;

    const long long used = static_cast<long long>(t.records.size());
    offset += static_cast<int>(used);
    remaining -= used;
    if (t.aborted || t.stopped_at || t.records.empty() || last) break;

    if (problem.f_star && !t.records.back().f_gap.has_value()) break;
    if (problem.f_star && gap0 > 0.0 && *t.records.back().f_gap > 0.99 * gap0) {
      out.stalled = true;
      break;
    }
    start = t.final_x;
  }
  return out;
}

Trace solve(const SmoothProblem& problem, const GradientOracle& oracle,
            const SolverConfig& config, Rng& rng) {
  if (config.restart) return restart_run(problem, oracle, config, rng);
  return run_inner(problem, oracle, config, rng, {});
}

Trace solve(const SmoothProblem& problem, const GradientOracle& oracle,
            const SolverConfig& config) {
  Rng rng(config.seed);
  return solve(problem, oracle, config, rng);
}

namespace {

void mark(CertificateReport& rep, std::size_t i, double lhs, double rhs, double magnitude) {
  const double slack = tol::scaled(kCertSlack, magnitude);
  const bool ok = lhs <= rhs + slack;
  rep.ok.push_back(ok);
  const double rel = (lhs - rhs) / std::max(std::abs(magnitude), tol::kAbsFloor);
  rep.worst_slack = i == 0 ? rel : std::max(rep.worst_slack, rel);
  if (!ok && !rep.first_failure) rep.first_failure = static_cast<int>(i);
}

}  // namespace

CertificateReport stm_certificate(const Trace& trace, double delta1, double delta2,
                                  std::optional<double> delta3) {
  CertificateReport rep;
  if (trace.algorithm != "stm") {
    rep.reason = "certificate applies to stm traces only";
    return rep;
  }
  if (!trace.restart_indices.empty()) {
    rep.reason = "certificate is per epoch; restarted traces are not supported";
    return rep;
  }
  if (trace.tau == 2 && !delta3) {
    rep.reason = "tau = 2 needs delta3";
    return rep;
  }
  for (const auto& r : trace.records) {
    if (!r.psi_min) {
      rep.reason = "psi values missing";
      return rep;
    }
  }
  rep.available = true;
  double sum_A = 0.0;
  double sum_A_prev = 0.0;   // sum_{j<k} A_j
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const IterRecord& r = trace.records[i];
    sum_A_prev = sum_A;
    sum_A += r.A_k;
    const double lhs = r.A_k * r.f_x;
    const double extra = trace.tau == 1 ? delta1 * r.weighted_path : *delta3 * sum_A_prev;
    const double rhs = *r.psi_min + delta2 * sum_A + extra;
    const double magnitude = std::max({std::abs(lhs), std::abs(*r.psi_min), delta2 * sum_A, extra});
    mark(rep, i, lhs, rhs, magnitude);
  }
  return rep;
}

Stm2CertificateReport stm2_certificate(const Trace& trace, double L, double mu, double R,
                                       double alpha, double f0_gap) {
  Stm2CertificateReport out;
  if (!(L > 0.0) || !(mu > 0.0) || !(R >= 0.0) || !(alpha >= 0.0)) {
    throw ConfigError("stm2_certificate: need L > 0, mu > 0, R >= 0, alpha >= 0");
  }
  bool have_gaps = !trace.records.empty();
  for (const auto& r : trace.records) {
    if (!r.f_gap || !r.f_query) have_gaps = false;
  }
  if (!have_gaps) {
    out.claim.reason = out.theorem.reason = "f* unknown";
    return out;
  }
  // f(y_k) - f* from the recorded query values
  const double f_star = trace.records[0].f_x - *trace.records[0].f_gap;
  const double m2 = 0.5 * mu;
  const double lambda = 1.25 * R * R * std::sqrt(L / m2);
  const double theta = 3.75 * alpha * alpha * std::sqrt(L * L * L / (m2 * m2 * m2));
  const double A0 = 1.0 / L;
  const bool under = alpha <= stm2_alpha_threshold(L, mu) * (1.0 + 1e-12);

  out.claim.available = true;
  out.theorem.available = under;
  if (!under) out.theorem.reason = "alpha above mu_2 / (7 L)";
  const double rate = std::sqrt(mu / (2.0 * L)) / 4.0;
  const double c_thm = 1.25 * L * R * R + (15.0 / 196.0) * std::sqrt(2.0 * L / mu) * f0_gap;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const IterRecord& r = trace.records[i];
    const double delta_k = *r.f_query - f_star;
    if (r.k < 1) {
      out.claim.ok.push_back(true);
      if (under) out.theorem.ok.push_back(true);
      continue;
    }
    const double growth = std::exp((r.k - 1) * std::log1p(theta));
    const double rhs = growth / r.A_k * lambda + theta * A0 * growth / r.A_k * f0_gap;
    mark(out.claim, i, delta_k, rhs, std::max(std::abs(rhs), std::abs(*r.f_query)));
    if (under) {
      const double rhs_t = c_thm * std::exp(-rate * r.k);
      mark(out.theorem, i, delta_k, rhs_t, std::max(std::abs(rhs_t), std::abs(*r.f_query)));
    }
  }
  return out;
}

double stopping_rhs(const StoppingConfig& cfg, double A_k, double sum_A, double weighted_path) {
  if (!(A_k > 0.0)) throw ConfigError("stopping: A_k must be > 0");
  const double noise = cfg.variant == StoppingVariant::theorem
                           ? 3.0 * cfg.R * cfg.delta1
                           : cfg.R * cfg.delta1 + cfg.delta1 * weighted_path;
  return cfg.delta2 / A_k * sum_A + noise + cfg.eps;
}

bool stopping_check(const StoppingConfig& cfg, double f_gap, double A_k, double sum_A,
                    double weighted_path) {
  return f_gap <= stopping_rhs(cfg, A_k, sum_A, weighted_path);
}

BoundCurve theoretical_bounds(double L, double mu, double R, double delta1, double delta2,
                              std::optional<double> delta3, std::span<const double> r_tilde,
                              int N) {
  if (!(L > 0.0)) throw ConfigError("bounds: L must be > 0");
  if (!(mu >= 0.0)) throw ConfigError("bounds: mu must be >= 0");
  if (N < 0) throw ConfigError("bounds: N must be >= 0");
  if (r_tilde.empty()) throw ConfigError("bounds: r_tilde is empty");
  if (r_tilde.size() != 1 && r_tilde.size() < static_cast<std::size_t>(N) + 1) {
    throw ConfigError("bounds: r_tilde needs one entry per N");
  }
  auto rt = [&](int n) { return r_tilde.size() == 1 ? r_tilde[0] : r_tilde[n]; };
  const double LR2 = L * R * R;
  BoundCurve b;
  b.mu0.resize(N + 1);
  b.mu0[0] = std::numeric_limits<double>::quiet_NaN();
  for (int n = 1; n <= N; ++n) {
    b.mu0[n] = 4.0 * LR2 / (static_cast<double>(n) * n) + 3.0 * rt(n) * delta1 + n * delta2;
  }
  if (mu > 0.0) {
    std::vector<double> t1(N + 1);
    const double mu1 = mu;
    for (int n = 0; n <= N; ++n) {
      t1[n] = LR2 * std::exp(-0.5 * std::sqrt(mu1 / L) * n) + (1.0 + std::sqrt(L / mu1)) * delta2 +
              3.0 * rt(n) * delta1;
    }
    b.tau1 = std::move(t1);
    if (delta3) {
      std::vector<double> t2(N + 1);
      const double mu2 = 0.5 * mu;
      const double noise = (1.0 + std::sqrt(L / mu2)) * (delta2 + *delta3);
      for (int n = 0; n <= N; ++n) t2[n] = LR2 * std::exp(-0.5 * std::sqrt(mu2 / L) * n) + noise;
      b.tau2 = std::move(t2);
    }
  }
  return b;
}

Regularized regularize(const SmoothProblem& problem, const Vector& x0, double eps, double R) {
  validate(problem);
  if (!(eps > 0.0) || !(R > 0.0)) throw ConfigError("regularize: eps and R must be > 0");
  if (x0.size() != problem.dim) throw ConfigError("regularize: x0 has the wrong dimension");
  Regularized out;
  out.mu_reg = (2.0 / 3.0) * eps / (R * R);
  out.L_f_coarse = 2.0 * problem.L_f;
  SmoothProblem& p = out.problem;
  p.name = problem.name + "+reg";
  p.dim = problem.dim;
  const double mr = out.mu_reg;
  p.value = [f = problem.value, x0, mr](const Vector& x) {
    return f(x) + 0.5 * mr * (x - x0).squaredNorm();
  };
  p.gradient = [g = problem.gradient, x0, mr](const Vector& x) -> Vector {
    return g(x) + mr * (x - x0);
  };
  p.L_f = problem.L_f + mr;
  p.mu = problem.mu + mr;
  return out;
}

std::vector<double> r_tilde_column(const Trace& trace) {
  std::vector<double> col;
  col.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    if (!r.r_tilde) return {};
    col.push_back(*r.r_tilde);
  }
  return col;
}

}  // namespace noisy_stm
