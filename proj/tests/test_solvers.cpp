#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <cmath>

#include "noisy_stm/problems.hpp"
#include "noisy_stm/sequences.hpp"
#include "noisy_stm/solvers.hpp"

using namespace noisy_stm;

namespace {

// f = 0.5 x^2 (+ offset) in one dimension, with mu reported as `mu`
SmoothProblem half_square(double mu, double offset = 0.0) {
  SmoothProblem p;
  p.name = "half_square";
  p.dim = 1;
  p.value = [offset](const Vector& x) { return 0.5 * x.squaredNorm() + offset; };
  p.gradient = [](const Vector& x) { return x; };
  p.L_f = 1.0;
  p.mu = mu;
  p.x_star = Vector::Zero(1);
  p.f_star = offset;
  return p;
}

Vector one(double v) { return Vector::Constant(1, v); }

SolverConfig cfg(const SmoothProblem& p, Algorithm a, int n, int tau = 1) {
  SolverConfig c = make_solver_config(p, a, n, tau);
  c.seed = 1;
  return c;
}

}  // namespace

TEST(Stm, HandTraceOfTwoSteps) {
  const auto p = half_square(0.0);
  auto c = cfg(p, Algorithm::stm, 1);
  c.x_start = one(1.0);
  c.keep_iterates = true;
  const Trace t = stm_run(p, GradientOracle::exact(), c);
  ASSERT_EQ(t.records.size(), 2u);
  // psi_0(x) = 0.5 (x - 1)^2 + 0.5 (f(1) + (x - 1)) is minimized at 0.5
  EXPECT_NEAR(t.iterates[0].z[0], 0.5, 1e-15);
  EXPECT_NEAR(t.iterates[0].x[0], 0.5, 1e-15);
  const double a1 = (1 + std::sqrt(5.0)) / 4;
  EXPECT_NEAR(t.records[1].alpha_k, a1, 1e-15);
  const double A1 = 0.5 + a1;
  const double xt = (0.5 * 0.5 + a1 * 0.5) / A1;
  const double z1 = 0.5 - a1 * xt;
  EXPECT_NEAR(t.iterates[1].query[0], xt, 1e-15);
  EXPECT_NEAR(t.iterates[1].z[0], z1, 1e-15);
  EXPECT_NEAR(z1, 0.095491, 1e-6);
  EXPECT_NEAR(t.iterates[1].x[0], 0.25, 1e-15);
  EXPECT_EQ(t.oracle_calls, 2);
}

TEST(Stm, RateOnHalfSquare) {
  const auto p = half_square(0.0);
  auto c = cfg(p, Algorithm::stm, 50);
  c.x_start = one(1.0);
  const Trace t = stm_run(p, GradientOracle::exact(), c);
  EXPECT_LE(*t.records[50].f_gap, 4 * 2 * 1.0 / (50.0 * 50));
}

TEST(Stm, DegenerateNesterovRateAndTrajectory) {
  const auto p = nesterov_degenerate(100, 50, 2.0);
  auto c = cfg(p, Algorithm::stm, 2000);
  const Trace t = stm_run(p, GradientOracle::exact(), c);
  const double R = p.x_star->norm();
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    EXPECT_LE(*t.records[k].f_gap, 4 * c.L * R * R / double(k * k)) << k;
  }
  EXPECT_LE(*t.records.back().r_tilde, R * (1 + 1e-8));
  EXPECT_FALSE(t.aborted);
}

TEST(Stm, ConstrainedIteratesStayFeasible) {
  const auto p = nesterov_strongly_convex(10, 0.2, 10.0);
  auto c = cfg(p, Algorithm::stm, 100);
  const FeasibleSet ball = Ball{Vector::Zero(10), 0.3};
  c.set = ball;
  c.keep_iterates = true;
  const Trace t = stm_run(p, GradientOracle::exact(), c);
  for (const auto& s : t.iterates) {
    EXPECT_TRUE(contains(ball, s.z, 1e-12));
    EXPECT_TRUE(contains(ball, s.x, 1e-12));
  }
  // the constrained optimum sits on the boundary here
  EXPECT_GT(p.x_star->norm(), 0.3);
  EXPECT_NEAR(t.final_x.norm(), 0.3, 1e-3);
}

TEST(Stm, DeterministicForSeed) {
  const auto p = nesterov_strongly_convex(10, 0.2, 10.0);
  const auto o = GradientOracle::with_noise(AbsoluteNoise{0.1});
  auto c = cfg(p, Algorithm::stm, 100);
  const Trace a = stm_run(p, o, c), b = stm_run(p, o, c);
  c.seed = 2;
  const Trace d = stm_run(p, o, c);
  EXPECT_EQ(a.final_x, b.final_x);
  EXPECT_NE(a.final_x, d.final_x);
}

TEST(Stm, AbortKeepsPartialTrace) {
  SmoothProblem p = half_square(0.0);
  p.value = [](const Vector& x) { return x[0] > 0.4 ? NAN : 0.5 * x.squaredNorm(); };
  auto c = cfg(p, Algorithm::stm, 10);
  c.x_start = one(0.3);
  p.gradient = [](const Vector& x) { return Vector(-4.0 * Vector::Ones(1) + 0 * x); };
  const Trace t = stm_run(p, GradientOracle::exact(), c);
  EXPECT_TRUE(t.aborted);
  EXPECT_FALSE(t.abort_reason.empty());
  EXPECT_LT(t.records.size(), 11u);
}

TEST(Certificate, HoldsWithNoiseAndCatchesCorruption) {
  for (double offset : {0.0, 10.0}) {
    const auto p = half_square(0.0, offset);
    auto c = cfg(p, Algorithm::stm, 100);
    c.x_start = one(1.0);
    const auto o = GradientOracle::with_noise(AbsoluteNoise{0.05});
    Trace t = stm_run(p, o, c);
    const auto ic = inexactness_constants(0.05, 1.0, 0.0);
    EXPECT_TRUE(stm_certificate(t, ic.delta1, ic.delta2).all_ok());
    EXPECT_TRUE(stm_certificate(stm_run(p, GradientOracle::exact(), c), 0, 0).all_ok());
    if (offset > 0) {
      for (auto& r : t.records) r.f_x *= 1.1;
      const auto rep = stm_certificate(t, ic.delta1, ic.delta2);
      ASSERT_TRUE(rep.available);
      ASSERT_TRUE(rep.first_failure);
      EXPECT_EQ(*rep.first_failure, 0);
      EXPECT_GT(rep.worst_slack, 0.0);
    }
  }
}

TEST(Certificate, TauTwoGrid) {
  const auto p = nesterov_strongly_convex(20, 0.2, 10.0);
  for (double delta : {0.0, 0.01, 0.1}) {
    auto c = cfg(p, Algorithm::stm, 300, 2);
    const auto ic = inexactness_constants(delta, p.L_f, p.mu);
    const Trace t = stm_run(p, GradientOracle::with_noise(AbsoluteNoise{delta}), c);
    EXPECT_TRUE(stm_certificate(t, ic.delta1, ic.delta2, ic.delta3).all_ok()) << delta;
    EXPECT_FALSE(stm_certificate(t, ic.delta1, ic.delta2).available);
  }
}

TEST(Certificate, UnavailableCases) {
  const auto p = nesterov_strongly_convex(5, 0.2, 10.0);
  const Trace g = gd_run(p, GradientOracle::exact(), cfg(p, Algorithm::gd, 5));
  EXPECT_FALSE(stm_certificate(g, 0, 0).available);
  auto c = cfg(p, Algorithm::stm, 30);
  c.restart = RestartSchedule{RestartSchedule::Kind::fixed_period, 10, 5};
  EXPECT_FALSE(stm_certificate(solve(p, GradientOracle::exact(), c), 0, 0).available);
}

TEST(Stm2, NoiselessOnHalfSquare) {
  const auto p = half_square(1.0);
  auto c = cfg(p, Algorithm::stm2, 30);
  c.x_start = one(1.0);
  const Trace t = stm2_run(p, GradientOracle::exact(), c);
  // momentum carries x_k across the minimizer around k = 7, so the gap is
  // not monotone; it stays under the tau = 2 bound at every step
  const std::vector<double> rt{1.0};
  const auto b = theoretical_bounds(c.L, p.mu, 1.0, 0, 0, 0.0, rt, 30);
  for (std::size_t k = 0; k < t.records.size(); ++k) EXPECT_LE(*t.records[k].f_gap, (*b.tau2)[k]) << k;
  EXPECT_LE(*t.records[30].f_gap, (*b.tau1)[30]);
  EXPECT_LT(*t.records[30].f_gap, 1e-15);
}

TEST(Stm2, FirstRecordCostsNoOracleCall) {
  const auto p = half_square(1.0);
  auto c = cfg(p, Algorithm::stm2, 0);
  c.x_start = one(1.0);
  const Trace t = stm2_run(p, GradientOracle::exact(), c);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.oracle_calls, 0);
  EXPECT_DOUBLE_EQ(*t.records[0].f_query, 0.5);
}

TEST(Stm2, UStepMatchesDirectMinimizer) {
  const auto p = nesterov_strongly_convex(8, 0.2, 10.0);
  auto c = cfg(p, Algorithm::stm2, 40);
  c.keep_iterates = true;
  c.x_start = Vector::Ones(8);
  const Trace t = stm2_run(p, GradientOracle::with_noise(RelativeNoise{0.005}), c);
  const double m2 = 0.5 * p.mu;
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    const double a = t.records[k].alpha_k, Ap = t.records[k - 1].A_k;
    const auto& s = t.iterates[k];
    const Vector& u0 = t.iterates[k - 1].z;
    // phi_k(u) = a <g, u - y> + (m2 a / 2)|u - y|^2 + ((1 + m2 Ap)/2)|u - u0|^2
    Matrix H = (m2 * a + 1 + m2 * Ap) * Matrix::Identity(8, 8);
    const Vector rhs = -a * s.g + m2 * a * s.query + (1 + m2 * Ap) * u0;
    const Vector u = H.ldlt().solve(rhs);
    EXPECT_LE((u - s.z).norm(), 1e-10 * std::max(1.0, u.norm()));
  }
}

TEST(Stm2, CertificatesAtThreshold) {
  const auto p = nesterov_strongly_convex(50, 0.2, 10.0);
  auto c = cfg(p, Algorithm::stm2, 200);
  const double alpha = stm2_alpha_threshold(c.L, p.mu);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    c.seed = seed;
    const Trace t = stm2_run(p, GradientOracle::with_noise(RelativeNoise{alpha}), c);
    const double R = p.x_star->norm();
    const double f0 = p.value(Vector::Zero(50)) - *p.f_star;
    const auto rep = stm2_certificate(t, c.L, p.mu, R, alpha, f0);
    EXPECT_TRUE(rep.claim.all_ok());
    EXPECT_TRUE(rep.theorem.all_ok());
  }
}

TEST(Stm2, AlphaZeroClaimCollapses) {
  const auto p = nesterov_strongly_convex(10, 0.2, 10.0);
  auto c = cfg(p, Algorithm::stm2, 100);
  const Trace t = stm2_run(p, GradientOracle::exact(), c);
  const double R = p.x_star->norm();
  const auto rep = stm2_certificate(t, c.L, p.mu, R, 0.0, 1.0);
  ASSERT_TRUE(rep.claim.available);
  EXPECT_TRUE(rep.claim.all_ok());
  const double lambda = 1.25 * R * R * std::sqrt(c.L / 0.1);
  for (const auto& r : t.records) {
    if (r.k >= 1) EXPECT_LE(*r.f_query - *p.f_star, lambda / r.A_k * (1 + 1e-8));
  }
}

TEST(Stm2, FarAboveThresholdIsReportedNotFatal) {
  const auto p = nesterov_strongly_convex(10, 0.2, 10.0);
  auto c = cfg(p, Algorithm::stm2, 100);
  const Trace t = stm2_run(p, GradientOracle::with_noise(RelativeNoise{0.9}), c);
  const auto rep = stm2_certificate(t, c.L, p.mu, p.x_star->norm(), 0.9, 1.0);
  EXPECT_TRUE(rep.claim.available);
  EXPECT_FALSE(rep.theorem.available);
  EXPECT_THROW(stm2_run(half_square(0.0), GradientOracle::exact(), cfg(half_square(0.0), Algorithm::stm2, 3)),
               ConfigError);
}

TEST(Gd, OneStepSolve) {
  const auto p = half_square(1.0);
  auto c = cfg(p, Algorithm::gd, 1);
  c.x_start = one(1.0);
  c.step = 1.0;
  const Trace t = gd_run(p, GradientOracle::exact(), c);
  EXPECT_EQ(t.final_x[0], 0.0);
  EXPECT_DOUBLE_EQ(t.records[1].A_k, 2.0);
}

TEST(Gd, FixedBiasNoiseFloor) {
  Vector l(2);
  l << 0.1, 1.0;
  const auto p = diagonal_quadratic(l);
  auto c = cfg(p, Algorithm::gd, 1000);
  c.x_start = Vector::Ones(2);
  c.step = 1.0;
  c.keep_iterates = true;
  Vector bias(2);
  bias << -0.01, 0.0;
  const auto o = GradientOracle::with_noise(AbsoluteNoise{0.01, AbsoluteNoise::Mode::fixed_bias, bias});
  const Trace t = gd_run(p, o, c);
  // x1 <- x1 - (0.1 x1 - 0.01) has fixed point 0.1
  EXPECT_NEAR(t.iterates[200].x[0], 0.1, 1e-3);
  for (std::size_t k = 500; k < t.records.size(); ++k) {
    EXPECT_GE(*t.records[k].f_gap, 0.01 * 0.01 / (2 * 0.1) * 0.95);
  }
}

TEST(Gd, DivergenceGuard) {
  const auto p = half_square(1.0);
  auto c = cfg(p, Algorithm::gd, 200);
  c.x_start = one(1.0);
  c.step = 3.5;
  const Trace t = gd_run(p, GradientOracle::exact(), c);
  EXPECT_TRUE(t.diverged);
  EXPECT_TRUE(t.aborted);
  EXPECT_LT(t.records.size(), 30u);
}

TEST(Tmm, IsotropicConverges) {
  SmoothProblem p = half_square(1.0);
  p.dim = 3;
  p.x_star = Vector::Zero(3);
  auto c = cfg(p, Algorithm::tmm, 60);
  c.x_start = Vector::Ones(3);
  const Trace t = tmm_run(p, GradientOracle::exact(), c);
  EXPECT_LE(*t.records.back().dist_to_opt, 1e-8);
}

TEST(Tmm, RateNearRho) {
  const auto p = nesterov_strongly_convex(30, 0.1, 20.0);
  auto c = cfg(p, Algorithm::tmm, 300);
  c.x_start = Vector::Ones(30);
  const Trace t = tmm_run(p, GradientOracle::exact(), c);
  const double rho = 1 - 1 / std::sqrt(p.L_f / p.mu);
  // slope of log distance before rounding takes over
  const double d1 = *t.records[20].dist_to_opt, d2 = *t.records[80].dist_to_opt;
  ASSERT_GT(d2, 0.0);
  EXPECT_LE(std::pow(d2 / d1, 1.0 / 60), rho + 0.05);
  EXPECT_THROW(tmm_run(half_square(0.0), GradientOracle::exact(), cfg(half_square(0.0), Algorithm::tmm, 3)),
               ConfigError);
}

TEST(Stopping, CheckExamples) {
  StoppingConfig s;
  s.eps = 1.0;
  s.R = 1.0;
  s.f_star = 0.0;
  EXPECT_TRUE(stopping_check(s, 0.5, 1.0, 1.0, 0.0));
  s.delta1 = 0.1;
  s.delta2 = 0.2;
  const double rhs = 0.2 / 2.0 * 3.0 + 0.3 + 1.0;
  EXPECT_DOUBLE_EQ(stopping_rhs(s, 2.0, 3.0, 5.0), rhs);
  EXPECT_TRUE(stopping_check(s, rhs, 2.0, 3.0, 5.0));
  EXPECT_FALSE(stopping_check(s, std::nextafter(rhs, 10.0), 2.0, 3.0, 5.0));
  s.variant = StoppingVariant::adaptive;
  EXPECT_DOUBLE_EQ(stopping_rhs(s, 2.0, 3.0, 5.0), 0.3 + 0.1 + 0.5 + 1.0);
}

TEST(Stopping, FiresByNmaxOnOneDimensionalQuadratic) {
  const auto p = half_square(0.0);
  auto c = cfg(p, Algorithm::stm, 1000);
  c.x_start = one(1.0);
  c.keep_iterates = true;
  StoppingConfig s;
  s.eps = 1e-3;
  s.R = 1.0;
  s.f_star = 0.0;
  c.stopping = s;
  const Trace t = stm_run(p, GradientOracle::exact(), c);
  ASSERT_TRUE(t.stopped_at);
  EXPECT_LE(*t.stopped_at, 64);
  EXPECT_EQ(t.records.size(), static_cast<std::size_t>(*t.stopped_at) + 1);
  for (int k = 0; k < *t.stopped_at; ++k) {
    EXPECT_LE(std::abs(t.iterates[k].x[0]), 1 + 1e-8);
    EXPECT_LE(std::abs(t.iterates[k].z[0]), 1 + 1e-8);
    EXPECT_LE(std::abs(t.iterates[k].query[0]), 1 + 1e-8);
  }
  EXPECT_TRUE(t.stopping_available);
}

TEST(Bounds, Examples) {
  const std::vector<double> rt{1.0};
  auto b = theoretical_bounds(2, 0, 1, 0, 0, std::nullopt, rt, 10);
  EXPECT_TRUE(std::isnan(b.mu0[0]));
  EXPECT_DOUBLE_EQ(b.mu0[10], 0.08);
  EXPECT_FALSE(b.tau1);
  for (int n = 2; n <= 10; ++n) EXPECT_LT(b.mu0[n], b.mu0[n - 1]);
  b = theoretical_bounds(2, 0.5, 1, 0, 0, 0.0, rt, 0);
  EXPECT_DOUBLE_EQ((*b.tau1)[0], 2.0);
  EXPECT_DOUBLE_EQ((*b.tau2)[0], 2.0);
  b = theoretical_bounds(2, 0, 1, 0, 1e-3, std::nullopt, rt, 1000);
  EXPECT_GT(b.mu0[1000], b.mu0[500]);
  EXPECT_THROW(theoretical_bounds(2, 0, 1, 0, 0, std::nullopt, std::vector<double>{1, 2}, 5),
               ConfigError);
}

TEST(Regularize, Example) {
  const auto p = half_square(1.0);
  const auto r = regularize(p, Vector::Zero(1), 0.6, 1.0);
  EXPECT_NEAR(r.mu_reg, 0.4, 1e-15);
  EXPECT_NEAR(r.problem.gradient(one(1.0))[0], 1.4, 1e-15);
  EXPECT_DOUBLE_EQ(r.L_f_coarse, 2.0);
  EXPECT_NEAR(r.problem.L_f, 1.4, 1e-15);
  const auto tiny = regularize(p, Vector::Zero(1), 1e-14, 1.0);
  EXPECT_NEAR(tiny.problem.gradient(one(2.0))[0], 2.0, 1e-13);
  // oracle noise passes through unchanged
  Rng r1(3), r2(3);
  const auto o = GradientOracle::with_noise(AbsoluteNoise{0.2});
  const auto a = query(o, p, one(0.7), r1), b = query(o, r.problem, one(0.7), r2);
  EXPECT_DOUBLE_EQ((a.gradient - a.exact_gradient).norm(), (b.gradient - b.exact_gradient).norm());
}

TEST(Restart, NoRestartsEqualsInnerRun) {
  const auto p = nesterov_strongly_convex(10, 0.2, 10.0);
  const auto o = GradientOracle::with_noise(AbsoluteNoise{0.05});
  auto c = cfg(p, Algorithm::stm, 80);
  const Trace inner = stm_run(p, o, c);
  c.restart = RestartSchedule{RestartSchedule::Kind::fixed_period, 10, 0};
  const Trace t = solve(p, o, c);
  ASSERT_EQ(t.records.size(), inner.records.size());
  EXPECT_TRUE(t.restart_indices.empty());
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    EXPECT_EQ(t.records[k].f_x, inner.records[k].f_x);
    EXPECT_EQ(t.records[k].k, inner.records[k].k);
  }
}

TEST(Restart, HalvingHalvesEachEpoch) {
  const auto p = nesterov_strongly_convex(20, 0.2, 10.0);
  auto c = cfg(p, Algorithm::stm, 400);
  c.x_start = Vector::Ones(20);
  c.restart = RestartSchedule{RestartSchedule::Kind::halving, 100, 8};
  const Trace t = solve(p, GradientOracle::exact(), c);
  // record 0 of an epoch already sits after one step, so measure from x_start
  const double gap0 = p.value(Vector::Ones(20)) - *p.f_star;
  const int m = static_cast<int>(t.restart_indices.size());
  ASSERT_GE(m, 3);
  for (int e = 0; e < m; ++e) {
    const int idx = t.restart_indices[e] - 1;   // last record of epoch e
    EXPECT_LE(*t.records[idx].f_gap, std::ldexp(gap0, -(e + 1)) * (1 + 1e-12));
  }
  EXPECT_EQ(t.records.back().k, 400);
}

TEST(Restart, FixedPeriodFromBudget) {
  Vector l(2);
  l << 0.5, 1.0;
  const auto p = diagonal_quadratic(l);
  auto c = cfg(p, Algorithm::stm, 200, 2);
  c.x_start = Vector::Constant(2, std::sqrt(0.5));
  const auto b = budget_strongly_convex(c.L, p.mu, 1.0, 0.01);
  c.restart = RestartSchedule{RestartSchedule::Kind::fixed_period, b.N, 5};
  const Trace t = solve(p, GradientOracle::exact(), c);
  EXPECT_LE(*t.records.back().f_gap, 0.01);
  EXPECT_EQ(t.restart_indices.front(), b.N + 1);
}
