#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "noisy_stm/oracles.hpp"
#include "noisy_stm/problems.hpp"

using namespace noisy_stm;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  Rng s(5);
  for (int n : {1, 2, 7}) EXPECT_NEAR(s.unit_sphere(n).norm(), 1.0, 1e-15);
}

TEST(Rng, DeriveSeedSeparatesAxes) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
}

TEST(Rng, NormalMoments) {
  Rng r(9);
  double m = 0, s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    m += z;
    s += z * z;
  }
  m /= n;
  s = s / n - m * m;
  EXPECT_NEAR(m, 0.0, 5.0 / std::sqrt(double(n)));
  EXPECT_NEAR(s, 1.0, 0.02);
}

TEST(Perturb, NoneIsIdentity) {
  Rng r(1);
  const Vector g = vec({0.3, -2.0});
  const auto out = perturb(g, NoNoise{}, r);
  EXPECT_EQ(out.g, g);
  EXPECT_EQ(out.noise_norm, 0.0);
}

TEST(Perturb, FixedBiasExample) {
  Rng r(1);
  AbsoluteNoise m{0.01, AbsoluteNoise::Mode::fixed_bias, vec({-0.01, 0.0})};
  const auto out = perturb(vec({0.03, 0.0}), m, r);
  EXPECT_NEAR(out.g[0], 0.02, 1e-17);
  EXPECT_EQ(out.g[1], 0.0);
  EXPECT_LE(out.noise_norm, 0.01);
}

TEST(Perturb, ShrinkExample) {
  Rng r(1);
  const auto out = perturb(vec({1.0, 0.0}), RelativeNoise{0.5, RelativeNoise::Mode::shrink}, r);
  EXPECT_DOUBLE_EQ(out.g[0], 0.5);
  EXPECT_DOUBLE_EQ(out.noise_norm, 0.5);
}

TEST(Perturb, SphereHasExactNormUpToRounding) {
  Rng r(2);
  const Vector g = vec({1.0, 2.0, -1.0});
  for (int i = 0; i < 500; ++i) {
    const auto a = perturb(g, AbsoluteNoise{0.3, AbsoluteNoise::Mode::sphere_uniform, {}}, r);
    EXPECT_LE(a.noise_norm, 0.3);
    EXPECT_NEAR(a.noise_norm, 0.3, 1e-14);
    EXPECT_NEAR((a.g - g).norm(), 0.3, 1e-14);
    const auto b = perturb(g, RelativeNoise{0.4, RelativeNoise::Mode::sphere_uniform}, r);
    EXPECT_LE(b.noise_norm, 0.4 * g.norm());
    EXPECT_NEAR(b.noise_norm, 0.4 * g.norm(), 1e-14);
  }
}

TEST(Perturb, RelativeAtStationaryPoint) {
  Rng r(3);
  const auto out = perturb(Vector::Zero(4), RelativeNoise{0.9, RelativeNoise::Mode::sphere_uniform}, r);
  EXPECT_EQ(out.g, Vector::Zero(4));
  EXPECT_EQ(out.noise_norm, 0.0);
}

TEST(Perturb, ValidationErrors) {
  Rng r(1);
  EXPECT_THROW(perturb(Vector::Ones(2), RelativeNoise{1.0}, r), ConfigError);
  EXPECT_THROW(perturb(Vector::Ones(2), RelativeNoise{-0.1}, r), ConfigError);
  EXPECT_THROW(perturb(Vector::Ones(2), AbsoluteNoise{-1.0}, r), ConfigError);
  AbsoluteNoise big{0.1, AbsoluteNoise::Mode::fixed_bias, vec({0.2, 0.0})};
  EXPECT_THROW(perturb(Vector::Ones(2), big, r), ConfigError);
  AbsoluteNoise wrong{0.1, AbsoluteNoise::Mode::fixed_bias, vec({0.01})};
  EXPECT_THROW(perturb(Vector::Ones(2), wrong, r), ConfigError);
}

TEST(CentralFd, Examples) {
  const ValueOracle f = [](const Vector& x) { return x[0] * x[0] + 2 * x[1] * x[1]; };
  const Vector g = central_fd_gradient(f, Vector::Ones(2), 0.1);
  EXPECT_NEAR(g[0], 2.0, 1e-14);
  EXPECT_NEAR(g[1], 4.0, 1e-14);
  const ValueOracle c = [](const Vector&) { return 3.5; };
  EXPECT_EQ(central_fd_gradient(c, Vector::Ones(3), 0.1), Vector::Zero(3));
  const ValueOracle cube = [](const Vector& x) { return x[0] * x[0] * x[0]; };
  EXPECT_NEAR(central_fd_gradient(cube, Vector::Ones(1), 0.1)[0], 3.01, 1e-13);
  EXPECT_THROW(central_fd_gradient(f, Vector::Ones(2), 0.0), ConfigError);
  EXPECT_THROW(central_fd_gradient(f, Vector::Constant(2, 1e20), 1e-4), NumericError);
}

TEST(CentralFd, CountsValueCalls) {
  const auto p = nesterov_degenerate(7, 3, 2.0);
  Rng r(1);
  const auto s = query(GradientOracle::zeroth_order({ZerothOrder::Scheme::central_fd, 1e-3, 1, 0.0}),
                       p, Vector::Ones(7), r);
  EXPECT_EQ(s.calls, 14);
  EXPECT_LT(s.noise_norm, 1e-9);
}

TEST(Smoothing, SingleSphereSampleByHand) {
  const ValueOracle f = [](const Vector& x) { return x[0]; };
  const std::vector<Vector> dirs{vec({1.0, 0.0})};
  const Vector g = sphere_smoothed_gradient(f, Vector::Zero(2), 0.7, dirs);
  EXPECT_NEAR(g[0], 2.0, 1e-15);
  EXPECT_EQ(g[1], 0.0);
}

TEST(Smoothing, ConstantGivesZero) {
  const ValueOracle f = [](const Vector&) { return -4.0; };
  Rng r(5);
  EXPECT_EQ(sphere_smoothed_gradient(f, Vector::Ones(3), 0.1, 10, r), Vector::Zero(3));
  EXPECT_EQ(gaussian_smoothed_gradient(f, Vector::Ones(3), 0.1, 10, r), Vector::Zero(3));
}

TEST(Smoothing, GaussianAntitheticPairOnQuadratic) {
  const ValueOracle f = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  Rng r(8);
  EXPECT_LT(gaussian_smoothed_gradient(f, Vector::Zero(4), 0.3, 20, r).norm(), 1e-15);
}

TEST(Smoothing, AffineMeanWithinFiveSigma) {
  const Vector a = vec({0.5, -1.5, 2.0});
  const ValueOracle f = [&](const Vector& x) { return a.dot(x) + 1.0; };
  for (const bool gaussian : {false, true}) {
    Rng r(gaussian ? 77 : 78);
    const int M = 10000;
    Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
    for (int m = 0; m < M; ++m) {
      const Vector e = gaussian ? gaussian_smoothed_gradient(f, Vector::Ones(3), 0.01, 1, r)
                                : sphere_smoothed_gradient(f, Vector::Ones(3), 0.01, 1, r);
      sum += e;
      sq += e.cwiseProduct(e);
    }
    const Vector mean = sum / M;
    for (int i = 0; i < 3; ++i) {
      const double sd = std::sqrt((sq[i] / M - mean[i] * mean[i]) * M / (M - 1));
      EXPECT_LT(std::abs(mean[i] - a[i]), 5 * sd / std::sqrt(double(M))) << gaussian << " " << i;
    }
  }
}

TEST(FdBudget, Examples) {
  const auto b = fd_error_budget(2, 1.0, 4, 1e-6);
  ASSERT_TRUE(b.h_opt);
  EXPECT_NEAR(*b.h_opt, 0.01, 1e-15);
  EXPECT_NEAR(b.delta_bound, 4e-4, 1e-15);
  const auto z = fd_error_budget(2, 1.0, 4, 0.0);
  EXPECT_FALSE(z.h_opt);
  EXPECT_EQ(z.delta_bound, 0.0);
  EXPECT_NEAR(fd_error_budget(2, 1.0, 4, 8e-6).delta_bound, 4 * b.delta_bound, 1e-15);
  EXPECT_THROW(fd_error_budget(3, 1.0, 4, 1e-6), ConfigError);
  EXPECT_THROW(fd_error_budget(1, 0.0, 4, 1e-6), ConfigError);
}

TEST(Query, AbsoluteDeltaOfOracles) {
  EXPECT_EQ(absolute_delta(GradientOracle::exact()), 0.0);
  EXPECT_EQ(absolute_delta(GradientOracle::with_noise(AbsoluteNoise{0.2})), 0.2);
  EXPECT_FALSE(absolute_delta(GradientOracle::with_noise(RelativeNoise{0.2})));
  EXPECT_FALSE(absolute_delta(GradientOracle::zeroth_order({})));
}

TEST(Query, SmoothingCallsAndDeterminism) {
  const auto p = nesterov_strongly_convex(5, 0.2, 10.0);
  const auto o = GradientOracle::zeroth_order({ZerothOrder::Scheme::gaussian, 1e-3, 6, 1e-8});
  Rng r1(4), r2(4);
  const auto a = query(o, p, Vector::Ones(5), r1);
  const auto b = query(o, p, Vector::Ones(5), r2);
  EXPECT_EQ(a.calls, 12);
  EXPECT_EQ(a.gradient, b.gradient);
  EXPECT_DOUBLE_EQ(a.noise_norm, (a.gradient - a.exact_gradient).norm());
}
