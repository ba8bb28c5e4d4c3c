#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "noisy_stm/harness.hpp"
#include "noisy_stm/sequences.hpp"

namespace noisy_stm {

namespace {

struct Worst {
  double value = -INFINITY;
  long long failures = 0;
  std::string first;

  // slack > 0 is a violation
  void see(double slack, const std::string& where) {
    if (std::isnan(slack)) slack = INFINITY;
    value = std::max(value, slack);
    if (slack > 0.0) {
      if (failures == 0) first = where;
      ++failures;
    }
  }
};

class Suite {
 public:
  Suite(VerifyReport& report, std::string scope) : report_(report), scope_(std::move(scope)) {}

  void add(const std::string& name, const Worst& w, const std::string& note = "") {
    VerifyEntry e;
    e.scope = scope_;
    e.name = name;
    e.passed = w.failures == 0;
    e.worst = std::isfinite(w.value) ? w.value : (w.value < 0 ? 0.0 : w.value);
    if (w.failures) {
      e.detail = std::to_string(w.failures) + " violation(s), first at " + w.first;
    } else {
      e.detail = note;
    }
    report_.entries.push_back(std::move(e));
  }

 private:
  VerifyReport& report_;
  std::string scope_;
};

// relative violation of lhs <= rhs
double excess(double lhs, double rhs, double scale) {
  return (lhs - rhs) / std::max(std::abs(scale), 1e-300);
}

// |a - b| <= 1e-9 max(a, b) + floor, as a signed relative slack
double close(double a, double b, double floor) {
  const double tolv = 1e-9 * std::max(a, b) + floor;
  return (std::abs(a - b) - tolv) / std::max(tolv, 1e-300);
}

std::string at(const std::string& what, long long i) { return what + " #" + std::to_string(i); }

Vector uniform_vector(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

std::vector<SmoothProblem> canonical_problems() {
  Rng rng(7);
  Matrix A(8, 5);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.uniform(-1.0, 1.0);
  Vector b = uniform_vector(rng, 8, -1.0, 1.0);
  Vector lambda(3);
  lambda << 0.1, 1.0, 2.0;
  return {nesterov_degenerate(20, 10, 2.0), nesterov_strongly_convex(20, 0.2, 10.0),
          diagonal_quadratic(lambda), least_squares(A, b)};
}

// problems with mu > 0, used by the tau = 2 and STM2 grids
std::vector<SmoothProblem> strongly_convex_problems() {
  auto all = canonical_problems();
  return {all[1], all[2], all[3]};
}

// ---------------------------------------------------------------- core

void core_suite(VerifyReport& report) {
  Suite s(report, "core");
  Rng rng(11);
  Worst exact, upper, lower1, lower3;
  long long i = 0;
  for (const auto& p : canonical_problems()) {
    const auto ic_deltas = std::vector<double>{0.01, 0.1, 1.0};
    for (int t = 0; t < 200; ++t, ++i) {
      const Vector x = uniform_vector(rng, p.dim, -2.0, 2.0);
      const Vector y = uniform_vector(rng, p.dim, -2.0, 2.0);
      const Evaluation ex = evaluate(p, x);
      const double fy = p.value(y);
      const Vector d = y - x;
      const double lin = ex.value + ex.gradient.dot(d);
      const double sq = d.squaredNorm();
      const double scale = std::abs(fy) + std::abs(ex.value) + std::abs(ex.gradient.dot(d)) +
                           p.L_f * sq + 1.0;
      exact.see(excess(fy, lin + 0.5 * p.L_f * sq, scale) - 1e-9, at(p.name, i));
      exact.see(excess(lin + 0.5 * p.mu * sq, fy, scale) - 1e-9, at(p.name, i));

      for (double delta : ic_deltas) {
        const Vector gt = ex.gradient + delta * rng.unit_sphere(p.dim);
        const auto ic = inexactness_constants(delta, p.L_f, p.mu);
        const double L = 2.0 * p.L_f;
        const double lt = ex.value + gt.dot(d);
        const double sc = scale + std::abs(gt.dot(d)) + L * sq;
        upper.see(excess(fy, lt + 0.5 * L * sq + ic.delta2, sc) - 1e-9, at(p.name, i));
        lower1.see(excess(lt + 0.5 * p.mu * sq - ic.delta1 * std::sqrt(sq), fy, sc) - 1e-9,
                   at(p.name, i));
        if (ic.delta3) {
          lower3.see(excess(lt + 0.25 * p.mu * sq - *ic.delta3, fy, sc) - 1e-9, at(p.name, i));
        }
      }
    }
  }
  s.add("smooth-convex-models", exact);
  s.add("inexact-upper-model", upper);
  s.add("inexact-lower-model-delta1", lower1);
  s.add("inexact-lower-model-delta3", lower3);
}

// ---------------------------------------------------------------- sequences

void sequences_suite(VerifyReport& report, bool poison) {
  Suite s(report, "sequences");
  {
    Rng rng(21);
    Worst w;
    for (long long i = 0; i < 100000; ++i) {
      const double L = std::pow(10.0, rng.uniform(-3.0, 3.0));
      const double mt = rng.uniform() < 0.25 ? 0.0 : L * std::pow(10.0, rng.uniform(-6.0, 0.0));
      const double A = std::pow(10.0, rng.uniform(-4.0, 6.0)) / L;
      double alpha = next_alpha(L, mt, A);
      if (poison) alpha *= 1.0 + 1e-6;
      w.see(recurrence_residual(L, mt, A, alpha) / 1e-10 - 1.0, at("triple", i));
    }
    s.add("alpha-recurrence-residual", w, "100000 random triples");
  }
  Worst mu0, mu0_strong, lam, psum;
  long long strong_misses = 0;
  for (double L : {0.5, 2.0, 10.0}) {
    for (double mt : {0.0, 0.01 * L, 0.1 * L}) {
      SequenceState st = SequenceState::initial(L, mt);
      const GrowthFactor gf = growth_factor(L, mt);
      double sum = st.A;
      for (int k = 1; k <= 500; ++k) {
        const SequenceState nx = st.next();
        sum += nx.A;
        const std::string where = "L=" + format_double(L) + " mu=" + format_double(mt) +
                                  " k=" + std::to_string(k);
        const double q = (k + 1.0) * (k + 1.0);
        if (mt == 0.0) {
          mu0.see(excess(q / (4.0 * L), nx.A, nx.A) - 1e-9, where);
          if (nx.A < q / (2.0 * L) * (1.0 - 1e-9)) ++strong_misses;
          mu0_strong.see(-1.0, where);
        } else {
          lam.see(excess(gf.lambda * st.A, nx.A, nx.A) - 1e-9, where);
        }
        const double ratio = sum / nx.A;
        psum.see(excess(ratio, partial_sum_bound(L, mt, k), ratio) - 1e-9, where);
        st = nx;
      }
    }
  }
  s.add("growth-mu0", mu0);
  s.add("growth-lambda", lam);
  s.add("partial-sum-bound", psum);
  s.add("growth-mu0-2L-report", mu0_strong,
        "report only: (k+1)^2/(2L) missed at " + std::to_string(strong_misses) + " steps");

  Worst mono;
  double prev_n = 0, prev_d_sc = INFINITY, prev_d_reg = INFINITY;
  int prev_sc = 0, prev_reg = 0, prev_lin = 0;
  for (double eps = 0.5; eps >= 1e-6; eps /= 1.7) {
    const std::string where = "eps=" + format_double(eps);
    const int n = n_max(2.0, 1.0, eps);
    mono.see(prev_n - n, where);
    prev_n = n;
    const Budget sc = budget_strongly_convex(2.0, 0.5, 1.0, eps);
    mono.see(prev_sc - sc.N, where);
    mono.see(sc.delta_max - prev_d_sc, where);
    prev_sc = sc.N;
    prev_d_sc = sc.delta_max;
    const Budget reg = budget_regularized(2.0, 1.0, eps);
    mono.see(prev_reg - reg.N, where);
    mono.see(reg.delta_max - prev_d_reg, where);
    prev_reg = reg.N;
    prev_d_reg = reg.delta_max;
    const Budget lin = budget_linear_system(3.0, 1.0, 2.0, eps);
    mono.see(prev_lin - lin.N, where);
    prev_lin = lin.N;
  }
  s.add("budget-monotone", mono);
}

// ---------------------------------------------------------------- oracles

void oracles_suite(VerifyReport& report) {
  Suite s(report, "oracles");
  Rng rng(31);
  {
    Worst w;
    for (int i = 0; i < 2000; ++i) {
      const Eigen::Index n = 1 + i % 9;
      const Vector g = uniform_vector(rng, n, -3.0, 3.0);
      const double delta = std::pow(10.0, rng.uniform(-4.0, 1.0));
      AbsoluteNoise sphere{delta, AbsoluteNoise::Mode::sphere_uniform, {}};
      AbsoluteNoise bias{delta, AbsoluteNoise::Mode::fixed_bias,
                         Vector(0.999 * delta * Rng(i).unit_sphere(n))};
      const double alpha = rng.uniform(0.0, 0.99);
      RelativeNoise rel{alpha, RelativeNoise::Mode::sphere_uniform};
      RelativeNoise shrink{alpha, RelativeNoise::Mode::shrink};
      const double gb = alpha * g.norm();
      for (const auto& [model, bound] : std::vector<std::pair<NoiseModel, double>>{
               {sphere, delta}, {bias, delta}, {rel, gb}, {shrink, gb}}) {
        const NoisyGradient out = perturb(g, model, rng);
        w.see(out.noise_norm > bound ? 1.0 : -1.0, at("draw", i));
      }
    }
    s.add("noise-bound-zero-slack", w);
  }
  {
    Worst w;
    for (int i = 0; i < 100; ++i) {
      const Vector zero = Vector::Zero(1 + i % 7);
      const NoisyGradient out =
          perturb(zero, RelativeNoise{0.9, RelativeNoise::Mode::sphere_uniform}, rng);
      w.see(out.g == zero && out.noise_norm == 0.0 ? -1.0 : 1.0, at("draw", i));
    }
    s.add("relative-zero-gradient", w);
  }
  {
    Worst w;
    for (int i = 0; i < 50; ++i) {
      const Eigen::Index n = 1 + i % 8;
      Matrix M(n, n);
      for (Eigen::Index j = 0; j < M.size(); ++j) M.data()[j] = rng.uniform(-1.0, 1.0);
      const Matrix H = M.transpose() * M;
      const Vector c = uniform_vector(rng, n, -1.0, 1.0);
      const ValueOracle f = [&](const Vector& x) { return 0.5 * x.dot(H * x) + c.dot(x); };
      const Vector x = uniform_vector(rng, n, -1.0, 1.0);
      const Vector exact = H * x + c;
      const Vector fd = central_fd_gradient(f, x, 1e-4);
      w.see((fd - exact).norm() / std::max(exact.norm(), 1.0) / 1e-8 - 1.0, at("quadratic", i));
    }
    s.add("central-fd-quadratic", w);
  }
  for (const bool gaussian : {false, true}) {
    Worst w;
    const int M = 10000;
    for (int t = 0; t < 3; ++t) {
      const Eigen::Index n = 2 + t;
      const Vector a = uniform_vector(rng, n, -2.0, 2.0);
      const double c0 = rng.uniform(-1.0, 1.0);
      const ValueOracle f = [&](const Vector& x) { return a.dot(x) + c0; };
      const Vector x = uniform_vector(rng, n, -1.0, 1.0);
      Rng draws(100 + t);
      Vector mean = Vector::Zero(n), sq = Vector::Zero(n);
      for (int m = 0; m < M; ++m) {
        const Vector e = gaussian ? gaussian_smoothed_gradient(f, x, 1e-3, 1, draws)
                                  : sphere_smoothed_gradient(f, x, 1e-3, 1, draws);
        mean += e;
        sq += e.cwiseProduct(e);
      }
      mean /= M;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double var = std::max(sq[i] / M - mean[i] * mean[i], 0.0) * M / (M - 1.0);
        const double lim = 5.0 * std::sqrt(var) / std::sqrt(double(M));
        w.see(std::abs(mean[i] - a[i]) - std::max(lim, 1e-12), at("component", i));
      }
    }
    s.add(gaussian ? "gaussian-smoothing-affine-mean" : "sphere-smoothing-affine-mean", w);
  }
  {
    Worst w;
    const SmoothProblem p = canonical_problems()[1];
    const Vector x = Vector::Constant(p.dim, 0.3);
    const std::vector<GradientOracle> oracles{
        GradientOracle::with_noise(AbsoluteNoise{0.1, AbsoluteNoise::Mode::sphere_uniform, {}}),
        GradientOracle::with_noise(RelativeNoise{0.3, RelativeNoise::Mode::sphere_uniform}),
        GradientOracle::zeroth_order({ZerothOrder::Scheme::sphere, 1e-3, 4, 1e-6}),
        GradientOracle::zeroth_order({ZerothOrder::Scheme::gaussian, 1e-3, 4, 1e-6})};
    for (std::size_t i = 0; i < oracles.size(); ++i) {
      Rng r1(99), r2(99);
      const Vector g1 = query(oracles[i], p, x, r1).gradient;
      const Vector g2 = query(oracles[i], p, x, r2).gradient;
      w.see(g1 == g2 ? -1.0 : 1.0, at("oracle", static_cast<long long>(i)));
    }
    s.add("seed-determinism", w);
  }
}

// ---------------------------------------------------------------- geometry

void geometry_suite(VerifyReport& report) {
  Suite s(report, "geometry");
  Rng rng(41);
  Worst nonexp, idem, feas;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Index n = 1 + i % 6;
    const Vector lo = uniform_vector(rng, n, -2.0, 0.0);
    const Vector hi = lo + uniform_vector(rng, n, 0.0, 2.0);
    const FeasibleSet box = Box{lo, hi};
    const FeasibleSet ball = Ball{uniform_vector(rng, n, -1.0, 1.0), rng.uniform(0.1, 2.0)};
    const Vector x = uniform_vector(rng, n, -5.0, 5.0);
    const Vector y = uniform_vector(rng, n, -5.0, 5.0);
    for (const FeasibleSet* set : {&box, &ball}) {
      const bool is_box = set == &box;
      const std::string where = at(is_box ? "box" : "ball", i);
      const Vector px = project(*set, x), py = project(*set, y);
      nonexp.see((px - py).norm() - (x - y).norm() - 1e-12, where);
      const Vector ppx = project(*set, px);
      if (is_box) idem.see(ppx == px ? -1.0 : 1.0, where);
      else idem.see((ppx - px).norm() - 1e-12, where);
      feas.see(contains(*set, px) ? -1.0 : 1.0, where);
    }
  }
  s.add("projection-nonexpansive", nonexp);
  s.add("projection-idempotent", idem);
  s.add("projection-feasible", feas);
}

// ---------------------------------------------------------------- problems

void problems_suite(VerifyReport& report) {
  Suite s(report, "problems");
  Rng rng(51);
  Worst stat, above, lip, sconv, eig;
  long long i = 0;
  for (const auto& p : canonical_problems()) {
    const Vector& xs = *p.x_star;
    const double gn = p.gradient(xs).norm();
    stat.see(gn / (1e-8 * std::max(1.0, p.L_f * xs.norm())) - 1.0, p.name);
    for (int t = 0; t < 200; ++t, ++i) {
      const double step = std::pow(10.0, rng.uniform(-6.0, 1.0));
      const Vector v = rng.unit_sphere(p.dim);
      const double f = p.value(xs + step * v);
      above.see(*p.f_star - f - tol::scaled(1e-12, *p.f_star), at(p.name, i));
      const Vector x = uniform_vector(rng, p.dim, -2.0, 2.0);
      const Vector y = uniform_vector(rng, p.dim, -2.0, 2.0);
      const Vector dg = p.gradient(x) - p.gradient(y);
      const Vector d = x - y;
      lip.see(excess(dg.norm() / d.norm(), p.L_f, p.L_f) - 1e-6, at(p.name, i));
      sconv.see(excess(p.mu, dg.dot(d) / d.squaredNorm(), p.L_f) - 1e-6, at(p.name, i));
    }
    // dense reference spectrum
    Matrix H(p.dim, p.dim);
    const Vector g0 = p.gradient(Vector::Zero(p.dim));
    for (Eigen::Index j = 0; j < p.dim; ++j) {
      H.col(j) = p.gradient(Vector::Unit(p.dim, j)) - g0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()));
    const double top = es.eigenvalues().maxCoeff();
    const double bottom = std::max(es.eigenvalues().minCoeff(), 0.0);
    eig.see(std::abs(p.L_f - top) / top / 1e-6 - 1.0, p.name + " L_f");
    if (p.mu > 0.0) eig.see(std::abs(p.mu - bottom) / top / 1e-6 - 1.0, p.name + " mu");
  }
  s.add("stationarity", stat);
  s.add("minimum-from-above", above);
  s.add("lipschitz-sampled", lip);
  s.add("strong-convexity-sampled", sconv);
  s.add("eigen-constants", eig);
}

// ---------------------------------------------------------------- solvers

SolverConfig stm_config(const SmoothProblem& p, int iterations, int tau, std::uint64_t seed) {
  SolverConfig c = make_solver_config(p, Algorithm::stm, iterations, tau);
  c.seed = seed;
  c.keep_iterates = true;
  return c;
}

void check_identities(const Trace& t, const SmoothProblem& p, bool unconstrained,
                      const std::string& tag, Worst& ident, Worst& psi, Worst& zrec) {
  const double L = t.L, mt = t.mu_tau;
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    const auto& r = t.records[k];
    const auto& r0 = t.records[k - 1];
    const auto& s = t.iterates[k];
    const auto& s0 = t.iterates[k - 1];
    const double A = r.A_k, Ap = r0.A_k, a = r.alpha_k;
    const std::string where = tag + " k=" + std::to_string(k);

    const Vector lhs = A * (s.x - s.query);
    const Vector rhs = a * (s.z - s.query) + Ap * (s0.x - s.query);
    const double sc1 = (A * (s.x - s.query)).norm() + (a * (s.z - s.query)).norm() +
                       (Ap * (s0.x - s.query)).norm();
    const double f1 = 1e-13 * (A * (s.x.norm() + s.query.norm()) + a * s.z.norm() +
                               Ap * s0.x.norm());
    const double t1 = 1e-9 * sc1 + f1;
    ident.see(((lhs - rhs).norm() - t1) / t1, where + " combination");

    // compared as norms; the floor covers cancellation once steps reach rounding level
    const double cz = std::sqrt((1.0 + mt * Ap) / (2.0 * A));
    const double cx = std::sqrt(0.5 * L);
    const double e1 = cz * (s.z - s0.z).norm();
    const double e2 = cx * (s.x - s.query).norm();
    const double f2 = 1e-13 * (cz * (s.z.norm() + s0.z.norm()) + cx * (s.x.norm() + s.query.norm()));
    ident.see(close(e1, e2, f2), where + " step");

    const double g1 = Ap * (s.query - s0.x).norm();
    const double g2 = a * (s.query - s0.z).norm();
    const double f3 = 1e-13 * (Ap * (s.query.norm() + s0.x.norm()) + a * s0.z.norm());
    ident.see(close(g1, g2, f3), where + " coupling");

    const Vector dz = s.z - s.query;
    const double model = *r.f_query + s.g.dot(dz) + 0.5 * mt * dz.squaredNorm();
    const double lower = *r0.psi_min + 0.5 * (1.0 + mt * Ap) * (s.z - s0.z).squaredNorm() +
                         a * model;
    const double scale = std::abs(*r.psi_min) + std::abs(*r0.psi_min) +
                         a * (std::abs(*r.f_query) + std::abs(s.g.dot(dz))) + 1.0;
    psi.see(excess(lower, *r.psi_min, scale) - 1e-8, where);

    if (unconstrained) {
      const Vector zr =
          s0.z - (a / (1.0 + mt * A)) * (s.g + mt * (s0.z - s.query));
      const double zs = std::max({s.z.norm(), s0.z.norm(), 1e-300});
      zrec.see((zr - s.z).norm() / zs / 1e-10 - 1.0, where);
    }
  }
  (void)p;
}

double max_distance(const Trace& t, const Vector& xs, std::size_t upto) {
  double m = 0.0;
  for (std::size_t k = 0; k < std::min(upto, t.iterates.size()); ++k) {
    const auto& s = t.iterates[k];
    m = std::max({m, (s.x - xs).norm(), (s.z - xs).norm(), (s.query - xs).norm()});
  }
  return m;
}

void solvers_suite(VerifyReport& report) {
  Suite s(report, "solvers");
  Worst ident, psi, zrec, bounded, dominance;
  const SmoothProblem deg = nesterov_degenerate(100, 50, 2.0);
  const auto probs = canonical_problems();

  // noiseless runs: identities, trajectory and bound dominance
  for (std::size_t pi = 0; pi < probs.size(); ++pi) {
    const SmoothProblem& p = pi == 0 ? deg : probs[pi];
    const int N = pi == 0 ? 2000 : 300;
    for (int tau : {1, 2}) {
      if (tau == 2 && p.mu == 0.0) continue;
      SolverConfig c = stm_config(p, N, tau, 1);
      // the degenerate problem starts at the origin, the others off the minimizer
      c.x_start = pi == 0 ? Vector::Zero(p.dim) : Vector::Ones(p.dim);
      const Trace t = stm_run(p, GradientOracle::exact(), c);
      const std::string tag = p.name + " tau=" + std::to_string(tau);
      check_identities(t, p, true, tag, ident, psi, zrec);
      const double R = (*c.x_start - *p.x_star).norm();
      bounded.see(excess(max_distance(t, *p.x_star, t.iterates.size()), R * (1 + 1e-8), R), tag);
      const double Rt = t.records.back().r_tilde.value_or(R);
      const std::vector<double> rt{Rt};
      const BoundCurve bc =
          theoretical_bounds(t.L, p.mu, R, 0.0, 0.0, p.mu > 0 ? std::optional(0.0) : std::nullopt,
                             rt, static_cast<int>(t.records.size()) - 1);
      for (std::size_t k = 1; k < t.records.size(); ++k) {
        const double gap = *t.records[k].f_gap;
        const std::string where = tag + " N=" + std::to_string(k);
        dominance.see(excess(gap, bc.mu0[k], bc.mu0[k]) - 1e-9, where);
        if (tau == 1 && bc.tau1) dominance.see(excess(gap, (*bc.tau1)[k], (*bc.tau1)[k]) - 1e-9, where);
        if (tau == 2 && bc.tau2) dominance.see(excess(gap, (*bc.tau2)[k], (*bc.tau2)[k]) - 1e-9, where);
      }
    }
  }
  // constrained and noisy runs for the identities and psi growth
  {
    const SmoothProblem& p = probs[1];
    for (int tau : {1, 2}) {
      SolverConfig c = stm_config(p, 300, tau, 3);
      c.set = Ball{Vector::Zero(p.dim), 0.5 * p.x_star->norm()};
      const auto oracle =
          GradientOracle::with_noise(AbsoluteNoise{0.05, AbsoluteNoise::Mode::sphere_uniform, {}});
      const Trace t = stm_run(p, oracle, c);
      check_identities(t, p, false, p.name + " ball tau=" + std::to_string(tau), ident, psi, zrec);
      const Trace u = stm_run(p, oracle, stm_config(p, 300, tau, 4));
      check_identities(u, p, true, p.name + " noisy tau=" + std::to_string(tau), ident, psi, zrec);
    }
  }
  s.add("stm-identities", ident);
  s.add("psi-monotone", psi);
  s.add("z-recursive-form", zrec);
  s.add("trajectory-bounded", bounded);
  s.add("theorem-bound-dominance", dominance);

  // stopping rule on a one dimensional quadratic
  {
    Worst fires, pre, post;
    Vector lambda(1);
    lambda << 1.0;
    const SmoothProblem q = diagonal_quadratic(lambda);
    for (double x0 : {1.0, -1.0}) {
      SolverConfig c = stm_config(q, 1000, 1, 1);
      c.x_start = Vector::Constant(1, x0);
      StoppingConfig st;
      st.eps = 1e-3;
      st.R = 1.0;
      st.f_star = 0.0;
      c.stopping = st;
      const Trace t = stm_run(q, GradientOracle::exact(), c);
      const int cap = n_max(c.L, 1.0, 1e-3);
      const std::string where = "x0=" + format_double(x0);
      fires.see(t.stopped_at ? double(*t.stopped_at - cap) : 1.0, where);
      if (t.stopped_at) {
        pre.see(excess(max_distance(t, *q.x_star, *t.stopped_at), 1.0 + 1e-8, 1.0), where);
        post.see(excess(*t.records[*t.stopped_at].f_gap, 1e-3, 1e-3), where);
      }
    }
    s.add("stopping-fires-by-nmax", fires);
    s.add("pre-stopping-bounded", pre);
    s.add("post-stopping-accuracy", post);
  }

  // certificate grid
  {
    Worst w;
    std::string unavailable;
    for (const auto& p : strongly_convex_problems()) {
      for (double delta : {0.0, 0.01, 0.1}) {
        for (int tau : {1, 2}) {
          for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            SolverConfig c = stm_config(p, 300, tau, seed);
            c.keep_iterates = false;
            const auto oracle = GradientOracle::with_noise(
                AbsoluteNoise{delta, AbsoluteNoise::Mode::sphere_uniform, {}});
            const Trace t = stm_run(p, oracle, c);
            const auto ic = inexactness_constants(delta, p.L_f, p.mu);
            const CertificateReport rep =
                stm_certificate(t, ic.delta1, ic.delta2, tau == 2 ? ic.delta3 : std::nullopt);
            const std::string where = p.name + " delta=" + format_double(delta) +
                                      " tau=" + std::to_string(tau) +
                                      " seed=" + std::to_string(seed);
            if (!rep.available) {
              w.see(1.0, where + " (" + rep.reason + ")");
              continue;
            }
            w.see(rep.first_failure ? std::max(rep.worst_slack, 1e-300) : rep.worst_slack - 1e-8,
                  rep.first_failure ? where + " k=" + std::to_string(*rep.first_failure) : where);
          }
        }
      }
    }
    s.add("stm-certificate", w, "90 runs x 301 records");
  }
  {
    Worst w;
    for (const auto& p : strongly_convex_problems()) {
      const double L = 2.0 * p.L_f;
      const double thr = stm2_alpha_threshold(L, p.mu);
      for (double alpha : {0.0, 0.5 * thr, thr}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
          SolverConfig c = make_solver_config(p, Algorithm::stm2, 300);
          c.seed = seed;
          const auto oracle = GradientOracle::with_noise(
              RelativeNoise{alpha, RelativeNoise::Mode::sphere_uniform});
          const Trace t = stm2_run(p, oracle, c);
          const Vector x0 = Vector::Zero(p.dim);
          const double R = (x0 - *p.x_star).norm();
          const double f0 = p.value(x0) - *p.f_star;
          const auto rep = stm2_certificate(t, L, p.mu, R, alpha, f0);
          const std::string where =
              p.name + " alpha=" + format_double(alpha) + " seed=" + std::to_string(seed);
          for (const CertificateReport* cr : {&rep.claim, &rep.theorem}) {
            if (!cr->available) {
              w.see(1.0, where + " (" + cr->reason + ")");
            } else {
              w.see(cr->first_failure ? std::max(cr->worst_slack, 1e-300) : cr->worst_slack - 1e-8,
                    where);
            }
          }
        }
      }
    }
    s.add("stm2-certificate", w, "alpha <= mu_2/(7L)");
  }
  {
    // gradient of phi_k vanishes at u_k on whole-space runs
    Worst w;
    for (const auto& p : strongly_convex_problems()) {
      SolverConfig c = make_solver_config(p, Algorithm::stm2, 200);
      c.seed = 5;
      c.keep_iterates = true;
      c.x_start = Vector::Ones(p.dim);
      const auto oracle = GradientOracle::with_noise(
          RelativeNoise{stm2_alpha_threshold(c.L, p.mu), RelativeNoise::Mode::sphere_uniform});
      const Trace t = stm2_run(p, oracle, c);
      const double m2 = 0.5 * p.mu;
      for (std::size_t k = 1; k < t.records.size(); ++k) {
        const auto& s0 = t.iterates[k - 1];
        const auto& s1 = t.iterates[k];
        const double a = t.records[k].alpha_k, Ap = t.records[k - 1].A_k;
        const Vector grad = a * s1.g + m2 * a * (s1.z - s1.query) + (1.0 + m2 * Ap) * (s1.z - s0.z);
        const double scale = (a * s1.g).norm() + m2 * a * (s1.z.norm() + s1.query.norm()) +
                             (1.0 + m2 * Ap) * (s1.z.norm() + s0.z.norm());
        const double tolv = 1e-10 * scale + 1e-300;
        w.see((grad.norm() - tolv) / tolv, p.name + " k=" + std::to_string(k));
      }
    }
    s.add("stm2-u-argmin", w);
  }
  {
    Worst w;
    const SmoothProblem& p = probs[1];
    const auto oracle =
        GradientOracle::with_noise(AbsoluteNoise{0.1, AbsoluteNoise::Mode::sphere_uniform, {}});
    for (Algorithm a : {Algorithm::stm, Algorithm::stm2, Algorithm::gd, Algorithm::tmm}) {
      SolverConfig c = make_solver_config(p, a, 200);
      c.seed = 17;
      const Trace t1 = solve(p, oracle, c), t2 = solve(p, oracle, c);
      bool same = t1.records.size() == t2.records.size() && t1.final_x == t2.final_x;
      for (std::size_t k = 0; same && k < t1.records.size(); ++k) {
        same = t1.records[k].f_x == t2.records[k].f_x &&
               t1.records[k].noise_norm == t2.records[k].noise_norm;
      }
      w.see(same ? -1.0 : 1.0, to_string(a));
    }
    s.add("determinism", w);
  }
}

// ---------------------------------------------------------------- harness

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.problem.family = ProblemFamily::nesterov_strongly_convex;
  c.problem.n = 20;
  c.problem.mu = 0.2;
  c.problem.chi = 10.0;
  c.iterations = 100;
  c.repetitions = 4;
  c.noise.kind = NoiseSpec::Kind::absolute;
  c.noise.delta = 0.05;
  return c;
}

void harness_suite(VerifyReport& report) {
  Suite s(report, "harness");
  {
    Worst w;
    const std::string empty = csv_text({});
    w.see(empty == std::string(kCsvHeader) + "\n" ? -1.0 : 1.0, "empty table");
    const BoundExperiment exp = bind(small_config());
    const Trace t = solve(exp.problem, exp.oracle, exp.solver);
    const auto rows = trace_rows(t, exp);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      w.see(rows[i].size() == 12 ? -1.0 : 1.0, at("row", static_cast<long long>(i)));
    }
    const std::string text = csv_text(rows);
    w.see(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0 ? -1.0 : 1.0, "header");
    w.see(text.find('\r') == std::string::npos ? -1.0 : 1.0, "line endings");
    s.add("csv-schema", w);
  }
  {
    Worst w;
    ExperimentConfig a = small_config();
    ExperimentConfig b = a;
    b.problem.family = ProblemFamily::least_squares;
    b.problem.A = Matrix::Identity(3, 3) * 2.0;
    b.problem.b = Vector::LinSpaced(3, 0.1, 0.3);
    b.algorithm = Algorithm::stm2;
    b.noise = NoiseSpec{};
    b.noise.kind = NoiseSpec::Kind::relative;
    b.noise.alpha = 1.0 / 3.0;
    b.set.kind = SetSpec::Kind::ball;
    b.set.center = Vector::Zero(3);
    b.set.radius = 0.7;
    b.stopping = StoppingSpec{StoppingVariant::adaptive, 1e-4, 0.9};
    b.sweep = SweepSpec{"noise.alpha", {0.1, 0.2}};
    b.restart = RestartSchedule{RestartSchedule::Kind::halving, 50, 3};
    for (const auto* c : {&a, &b}) {
      const std::string one = serialize_config(*c);
      const std::string two = serialize_config(parse_config(one));
      w.see(one == two ? -1.0 : 1.0, c == &a ? "absolute" : "relative");
    }
    s.add("config-roundtrip", w);
  }
  {
    Worst w;
    const ExperimentConfig c = small_config();
    const BoundExperiment exp = bind(c);
    auto mean_text = [&](int workers) {
      std::vector<std::vector<CsvRow>> all(c.repetitions);
      parallel_for(c.repetitions, workers, [&](int i) {
        SolverConfig sc = exp.solver;
        sc.seed = derive_seed(c.seed, i, 0);
        Rng rng(sc.seed);
        all[i] = trace_rows(solve(exp.problem, exp.oracle, sc, rng), exp);
      });
      return csv_text(mean_rows(all));
    };
    const std::string serial = mean_text(1);
    w.see(serial == mean_text(4) ? -1.0 : 1.0, "4 workers");
    w.see(serial == mean_text(1) ? -1.0 : 1.0, "rerun");
    s.add("parallel-serial-identical", w);
  }
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

std::string VerifyReport::text() const {
  std::ostringstream out;
  const VerifyEntry* first = nullptr;
  for (const auto& e : entries) {
    char worst[64];
    std::snprintf(worst, sizeof worst, "%.3g", e.worst);
    out << (e.passed ? "PASS " : "FAIL ") << e.scope << "/" << e.name << " worst=" << worst;
    if (!e.detail.empty()) out << "  " << e.detail;
    out << "\n";
    if (!e.passed && !first) first = &e;
  }
  if (first) out << "first failure: " << first->scope << "/" << first->name << ": " << first->detail << "\n";
  else out << "all " << entries.size() << " invariants passed\n";
  return out.str();
}

VerifyReport verify(const std::string& scope, const std::string& poison) {
  static const std::vector<std::string> scopes{"core", "sequences", "oracles", "geometry",
                                               "problems", "solvers", "harness"};
  if (scope != "all" && std::find(scopes.begin(), scopes.end(), scope) == scopes.end()) {
    throw ConfigError("unknown verify scope '" + scope + "'");
  }
  if (!poison.empty() && poison != "recurrence") {
    throw ConfigError("unknown poison mode '" + poison + "'");
  }
  const bool bad = poison == "recurrence";
  VerifyReport report;
  auto want = [&](const char* s) { return scope == "all" || scope == s; };
  if (want("core")) core_suite(report);
  // the poisoned check lives in sequences; run it whatever the scope
  if (want("sequences") || bad) sequences_suite(report, bad);
  if (want("oracles")) oracles_suite(report);
  if (want("geometry")) geometry_suite(report);
  if (want("problems")) problems_suite(report);
  if (want("solvers")) solvers_suite(report);
  if (want("harness")) harness_suite(report);
  return report;
}

}  // namespace noisy_stm
