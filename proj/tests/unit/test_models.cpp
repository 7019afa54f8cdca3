#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tipping/models.hpp"
#include "tipping/presets.hpp"

using namespace tipping;

namespace {

std::vector<VectorFieldModel> catalog() {
  using CF = CoefficientFunction;
  return {
      presets::allee_rational(),
      presets::logistic_migration(),
      presets::holling_predation(),
      make_model(Family::gompertz, {{"r", CF::sine(1.0, 0.3, 0.7)}, {"K", CF::sine_squared(50.0, 10.0, 0.2)}}),
      make_model(Family::beverton_holt, {{"r", CF::constant(2.0)}, {"alpha", CF::sine(0.1, 0.02, 1.3)}}),
      make_model(Family::allee_multiplicative_cubic,
                 {{"r", CF::constant(1.0)}, {"K", CF::sine(60.0, 5.0, 0.5)}, {"S", CF::constant(20.0)}}),
      make_model(Family::allee_holling2,
                 {{"r", CF::constant(1.0)}, {"K", CF::constant(80.0)}, {"a", CF::constant(30.0)}, {"b", CF::constant(10.0)}}),
  };
}

}  // namespace

TEST(Models, RationalAlleeGoldenValue) {
  // r x (1 - x/K)(x - mu)/(nu + x) + gamma phi at t = 0: r=1.5, K=40, mu=30, nu=40, phi=0.75.
  const double r = 1.5, K = 40, mu = 30, nu = 40, phi = 0.75, x = 10, g = 1.5;
  const double oracle = r * x * (1 - x / K) * (x - mu) / (nu + x) + g * phi;
  EXPECT_DOUBLE_EQ(oracle, -3.375);
  EXPECT_NEAR(presets::allee_rational().f(0.0, 10.0, 1.5), -3.375, 1e-12);
}

TEST(Models, LogisticVertexEqualsMigration) {
  const auto m = presets::logistic_migration();
  for (double t : {-3.0, 0.0, 1.7, 40.0}) {
    const double I = 0.895 - std::sin(t / 2) - std::sin(std::sqrt(5.0) * t);
    EXPECT_DOUBLE_EQ(m.f(t, 0.3, 0.3), I);
  }
}

TEST(Models, HollingVanishesAtZero) {
  const auto m = presets::holling_predation();
  for (double t : {-5.0, 0.0, 3.3})
    for (double g : {-1.0, 0.0, 0.5}) EXPECT_EQ(m.f(t, 0.0, g), 0.0);
}

TEST(Models, HollingClosedForm) {
  const auto m = presets::holling_predation();
  const double t = 0.9, x = 37.0, g = -0.2;
  const double r = 2 + std::sin(t), s = std::sin(std::sqrt(5.0) * t / 2), K = 90 + 18 * s * s;
  EXPECT_NEAR(m.f(t, x, g), r * x * (1 - x / K) - (52 - 13 * g) * x / (x + 10), 1e-12);
}

TEST(Models, DerivativeConsistency) {
  std::mt19937_64 rng(12345);
  for (const auto& m : catalog()) {
    const Interval box = m.state_box();
    std::uniform_real_distribution<double> T(-500.0, 500.0), X(box.lo + 0.5, box.hi), G(-1.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
      const double t = T(rng), x = X(rng), g = G(rng);
      const double h = 1e-5 * (1.0 + std::abs(x));
      const double fd = (m.f(t, x + h, g) - m.f(t, x - h, g)) / (2 * h);
      const double fx = m.fx(t, x, g);
      ASSERT_LE(std::abs(fx - fd), 1e-6 * (1.0 + std::abs(fx))) << to_string(m.family()) << " t=" << t << " x=" << x;
      if (m.concavity() == Concavity::d_concave) {
        const double fdd = (m.fx(t, x + h, g) - m.fx(t, x - h, g)) / (2 * h);
        const double fxx = m.fxx(t, x, g);
        ASSERT_LE(std::abs(fxx - fdd), 1e-6 * (1.0 + std::abs(fxx))) << to_string(m.family());
      }
      const double hg = 1e-6;
      const double fdg = (m.f(t, x, g + hg) - m.f(t, x, g - hg)) / (2 * hg);
      ASSERT_LE(std::abs(m.fgamma(t, x, g) - fdg), 1e-6 * (1.0 + std::abs(fdg))) << to_string(m.family());
    }
  }
}

TEST(Models, GammaMonotoneForPositiveStates) {
  std::mt19937_64 rng(7);
  for (const auto& m : {presets::allee_rational(), presets::holling_predation()}) {
    std::uniform_real_distribution<double> T(-300.0, 300.0), X(0.1, m.state_box().hi), G(-1.0, 2.0);
    for (int i = 0; i < 500; ++i) {
      const double t = T(rng), x = X(rng), g = G(rng);
      ASSERT_LT(m.f(t, x, g), m.f(t, x, g + 0.01));
    }
  }
}

TEST(Models, ConcavityChecks) {
  using CF = CoefficientFunction;
  const auto lg = make_model(Family::concave_logistic_migration, {{"r", CF::constant(1.0)}, {"I", CF::constant(0.5)}});
  const auto rep = check_concavity_class(lg, {-50.0, 50.0}, 5);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.delta, 2.0, 1e-6);

  const auto gz = make_model(Family::gompertz, {{"r", CF::constant(1.0)}, {"K", CF::constant(50.0)}});
  EXPECT_TRUE(check_concavity_class(gz, {0.1, 100.0}, 5).pass);

  for (const auto& m : catalog()) EXPECT_TRUE(check_concavity_class(m, m.state_box(), 50).pass) << to_string(m.family());

  // x' = +x^2 written as a logistic with negative r is convex.
  struct Convex {
    double f(double, double x, double) const { return x * x; }
    double fx(double, double x, double) const { return 2 * x; }
    double fxx(double, double, double) const { return 2.0; }
    Concavity concavity() const { return Concavity::concave; }
    Interval state_box() const { return {-5.0, 5.0}; }
  };
  EXPECT_FALSE(check_concavity_class(Convex{}, {-5.0, 5.0}, 3).pass);
}

TEST(Models, ErrorsAndDomain) {
  using CF = CoefficientFunction;
  EXPECT_THROW(make_model("no-such-family", {}), config_error);
  EXPECT_THROW(make_model(Family::gompertz, {{"r", CF::constant(1.0)}}), config_error);
  EXPECT_THROW(make_model(Family::gompertz, {{"r", CF::sine(0.5, 1.0, 1.0)}, {"K", CF::constant(1.0)}}), config_error);
  EXPECT_THROW(presets::allee_rational().f(0.0, -40.0, 1.5), domain_error);
  EXPECT_THROW(presets::logistic_migration().fxx(0.0, 0.0, 0.0), domain_error);
}

TEST(Models, CoefficientClosedFormAtCheckpoints) {
  const auto f = CoefficientFunction::sine_squared(40.0, 40.0, std::sqrt(5.0) / 16.0);
  for (double t : {0.0, 0.5, 16.0 / std::sqrt(5.0) * std::numbers::pi / 2}) {
    const double s = std::sin(std::sqrt(5.0) * t / 16.0);
    EXPECT_NEAR(f(t), 40 + 40 * s * s, 1e-12);
  }
  EXPECT_TRUE(f.positively_bounded_below());
  EXPECT_FALSE(CoefficientFunction::sine(0.0, 1.0, 1.0).positively_bounded_below());
}
