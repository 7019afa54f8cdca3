#include <gtest/gtest.h>

#include <cmath>

#include "tipping/attractors.hpp"
#include "tipping/presets.hpp"

using namespace tipping;

namespace {

// x' = a x + gamma, concave (linear) with a single hyperbolic solution.
struct Linear {
  double a = -1.0;
  double f(double, double x, double g) const { return a * x + g; }
  double fx(double, double, double) const { return a; }
  double fxx(double, double, double) const { return 0.0; }
  Concavity concavity() const { return Concavity::concave; }
  Interval state_box() const { return {-5.0, 5.0}; }
};

VectorFieldModel beverton_holt_forced() {
  using CF = CoefficientFunction;
  return make_model(Family::beverton_holt, {{"r", CF::constant(2.0)}, {"alpha", CF::sine(0.1, 0.01, 0.7)}});
}

}  // namespace

TEST(Attractors, AlleeHasThreeOrderedSolutions) {
  const auto m = presets::allee_rational();
  const auto ls = limit_hyperbolic_solutions(m, 1.5, Interval{-50.0, 50.0});
  ASSERT_TRUE(ls.complete) << ls.note;
  ASSERT_EQ(ls.estimates.size(), 3u);
  const auto& u = ls.get(Role::upper_attractive);
  const auto& mid = ls.get(Role::middle_repulsive);
  const auto& l = ls.get(Role::lower_attractive);
  for (double t = -50; t <= 50; t += 0.5) {
    EXPECT_LT(mid(t), u(t));
    EXPECT_LT(l(t), mid(t));
    EXPECT_LT(std::abs(l(t)), 5.0) << t;
  }
  EXPECT_GE(ls.separation, AttractorConfig{}.sep_tol);
}

TEST(Attractors, LogisticHasAttractorRepellerPair) {
  const auto ls = limit_hyperbolic_solutions(presets::logistic_migration(), 0.0, Interval{-30.0, 30.0});
  ASSERT_TRUE(ls.complete) << ls.note;
  ASSERT_EQ(ls.estimates.size(), 2u);
  for (double t = -30; t <= 30; t += 0.5) EXPECT_GT(ls.get(Role::attractive)(t), ls.get(Role::repulsive)(t));
}

TEST(Attractors, LinearFieldHasOnlyTheAttractor) {
  const auto ls = limit_hyperbolic_solutions(Linear{}, 0.0, Interval{-10.0, 10.0});
  EXPECT_FALSE(ls.complete);
  ASSERT_EQ(ls.estimates.size(), 1u);
  for (double t = -10; t <= 10; t += 0.5) EXPECT_NEAR(ls.get(Role::attractive)(t), 0.0, 1e-8);
  EXPECT_THROW(ls.get(Role::repulsive), missing_structure_error);
}

TEST(Attractors, LyapunovExponentsWithClosedForms) {
  EXPECT_NEAR(lyapunov_of(Linear{-0.7}, 0.3, Role::attractive, 200).exponent, -0.7, 1e-12);
  using CF = CoefficientFunction;
  const auto gz = make_model(Family::gompertz, {{"r", CF::constant(0.8)}, {"K", CF::constant(50.0)}});
  EXPECT_NEAR(lyapunov_of(gz, 0.0, Role::attractive, 200).exponent, -0.8, 1e-6);
}

TEST(Attractors, AlleeReferenceExponent) {
  const auto e = lyapunov_of(presets::allee_rational(), 1.5, Role::upper_attractive, 2000);
  EXPECT_NEAR(e.exponent, -0.4134, 0.005);
  EXPECT_LT(e.sensitivity, 1e-2);
}

TEST(Attractors, MonotoneInGammaDConcave) {
  const auto m = presets::allee_rational();
  const double gs[] = {1.3, 1.4, 1.5, 1.6, 1.7};
  std::vector<LimitStructure> ls;
  for (double g : gs) {
    ls.push_back(limit_hyperbolic_solutions(m, g, Interval{-20.0, 20.0}));
    ASSERT_TRUE(ls.back().complete) << "gamma=" << g << ' ' << ls.back().note;
  }
  for (std::size_t k = 0; k + 1 < ls.size(); ++k) {
    for (int i = 0; i < 10; ++i) {
      const double t = -18.0 + 4.0 * i;
      EXPECT_LT(ls[k].get(Role::upper_attractive)(t), ls[k + 1].get(Role::upper_attractive)(t));
      EXPECT_GT(ls[k].get(Role::middle_repulsive)(t), ls[k + 1].get(Role::middle_repulsive)(t));
      EXPECT_LT(ls[k].get(Role::lower_attractive)(t), ls[k + 1].get(Role::lower_attractive)(t));
    }
  }
}

TEST(Attractors, MonotoneInGammaConcave) {
  const auto m = beverton_holt_forced();
  const double gs[] = {-3.0, -2.0, -1.0};
  std::vector<LimitStructure> ls;
  for (double g : gs) {
    ls.push_back(limit_hyperbolic_solutions(m, g, Interval{-20.0, 20.0}));
    ASSERT_TRUE(ls.back().complete) << "gamma=" << g << ' ' << ls.back().note;
  }
  for (std::size_t k = 0; k + 1 < ls.size(); ++k) {
    for (double t = -18; t <= 18; t += 4) {
      EXPECT_LT(ls[k].get(Role::attractive)(t), ls[k + 1].get(Role::attractive)(t));
      EXPECT_GT(ls[k].get(Role::repulsive)(t), ls[k + 1].get(Role::repulsive)(t));
    }
  }
}

TEST(Attractors, ConstantMechanismPullbackIsTheAnchor) {
  const auto m = presets::allee_rational();
  const TransitionMechanism mech(Profile::constant(1.5), ConstantRate{1.0});
  const double Th = 400;
  const auto past = limit_hyperbolic_solutions(m, 1.5, Interval{-Th, Th});
  const auto u = pullback_attractive(m, mech, past.get(Role::upper_attractive), Th);
  const auto r = pullback_repulsive(m, mech, past.get(Role::middle_repulsive), Th);
  ASSERT_TRUE(u.bounded());
  ASSERT_TRUE(r.bounded());
  for (double t = -Th; t <= Th; t += 10) {
    EXPECT_NEAR(u(t), past.get(Role::upper_attractive)(t), 1e-6) << t;
    EXPECT_NEAR(r(t), past.get(Role::middle_repulsive)(t), 1e-6) << t;
  }
}

TEST(Attractors, PullbackSolutionsAreAnchorInsensitiveAndOrdered) {
  const auto m = presets::allee_rational();
  const TransitionMechanism mech(presets::allee_pulse(), ConstantRate{1.01});
  AttractorConfig ac;
  const double Th = choose_horizon(mech, ac);
  const auto past = limit_hyperbolic_solutions(m, mech.past_limit(), Interval{-Th, -Th + 1.0}, ac);
  const auto future = limit_hyperbolic_solutions(m, mech.future_limit(), Interval{Th - 1.0, Th}, ac);
  const auto u = pullback_attractive(m, mech, past.get(Role::upper_attractive), Th, ac);
  const auto l = pullback_attractive(m, mech, past.get(Role::lower_attractive), Th, ac);
  const auto r = pullback_repulsive(m, mech, future.get(Role::middle_repulsive), Th, ac);
  ASSERT_TRUE(u.bounded());
  ASSERT_TRUE(l.bounded());
  EXPECT_TRUE(u.anchor.performed);
  EXPECT_TRUE(u.anchor.pass) << u.anchor.deviation;
  EXPECT_TRUE(l.anchor.pass) << l.anchor.deviation;
  for (double t = -200; t <= 200; t += 1) {
    EXPECT_LE(l(t), u(t));
    if (r.trajectory.covers(t)) {
      EXPECT_LT(r(t), u(t)) << t;
      EXPECT_GT(r(t), l(t)) << t;
    }
  }
  // c above the critical rate: u tracks the future upper attractor.
  EXPECT_NEAR(u.trajectory.final_state(), future.get(Role::upper_attractive)(Th), 1e-3);
}

TEST(Attractors, ConfigValidation) {
  AttractorConfig bad;
  bad.burn_in = 0;
  EXPECT_THROW(bad.validate(), config_error);
  EXPECT_THROW(limit_hyperbolic_solutions(Linear{}, 0.0, Interval{1.0, 1.0}), config_error);
}
