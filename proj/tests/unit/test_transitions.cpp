#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tipping/classify.hpp"
#include "tipping/presets.hpp"
#include "tipping/transitions.hpp"

using namespace tipping;

TEST(Profiles, CauchyPulse) {
  const auto p = Profile::cauchy_pulse(1.5, 0.8, 0.02386);
  EXPECT_DOUBLE_EQ(p(0.0), 0.8);
  EXPECT_DOUBLE_EQ(p.limit_minus(), 1.5);
  EXPECT_DOUBLE_EQ(p.limit_plus(), 1.5);
  for (double t : {0.3, 2.0, 17.0, 400.0}) EXPECT_DOUBLE_EQ(p(t), p(-t));
  for (double t : {0.1, 1.0, 10.0}) EXPECT_GT(p(t), p(0.0));
  EXPECT_THROW(Profile::cauchy_pulse(1.5, 0.8, 0.0), config_error);
}

TEST(Profiles, SigmoidBlendAndRamp) {
  const auto s = Profile::sigmoid_blend(0.25, 0.74);
  EXPECT_DOUBLE_EQ(s(0.0), 0.495);
  const auto r = presets::logistic_ramp();
  EXPECT_DOUBLE_EQ(r(0.0), 0.0);
  EXPECT_NEAR(r.limit_minus(), -1.0, 1e-15);
  EXPECT_NEAR(r.limit_plus(), 1.0, 1e-15);
}

TEST(Profiles, LimitConsistency) {
  const Profile all[] = {Profile::constant(2.0),
                         Profile::cauchy_pulse(1.5, 0.8, 0.02386),
                         Profile::arctan_ramp(2 / std::numbers::pi),
                         Profile::sigmoid_blend(-5.0, 10.0),
                         Profile::rational_dip(35, 300, 10),
                         Profile::rational_dip(30, 147, 6, 4),
                         Profile::arctan_step(20, 1, 10),
                         presets::holling_dip()};
  for (const auto& p : all) {
    EXPECT_NEAR(p(-1e6), p.limit_minus(), 1e-4);
    EXPECT_NEAR(p(1e6), p.limit_plus(), 1e-4);
    for (double t = -200; t <= 200; t += 0.37) {
      EXPECT_GE(p(t), p.infimum() - 1e-12);
      EXPECT_LE(p(t), p.supremum() + 1e-12);
    }
  }
}

TEST(Profiles, RateProfilesMustBePositive) {
  EXPECT_THROW(make_rate_profile("rational-dip", {{"base", 1.0}, {"amplitude", 20.0}, {"offset", 10.0}}), config_error);
  EXPECT_NO_THROW(make_rate_profile("rational-dip", {{"base", 35.0}, {"amplitude", 300.0}, {"offset", 10.0}}));
  EXPECT_THROW(make_profile("nope", {}), config_error);
  EXPECT_THROW(make_profile("cauchy-pulse", {{"gamma_plus", 1.0}}), config_error);
}

TEST(Mechanisms, EffectiveParameter) {
  const auto g = presets::allee_pulse();
  EXPECT_DOUBLE_EQ(TransitionMechanism(g, ConstantRate{2.0})(3.0), g(6.0));
  EXPECT_DOUBLE_EQ(TransitionMechanism(g, PhaseShift{2.0, 1.0})(3.0), g(8.0));
  const auto ramp = presets::logistic_ramp();
  EXPECT_DOUBLE_EQ(TransitionMechanism(ramp, SizeScale{3.0})(0.7), 3.0 * ramp(0.7));
  EXPECT_DOUBLE_EQ(phase_problem(ramp, 1.0, 2.5)(1.0), ramp(1.0 - 2.5));
}

TEST(Mechanisms, ConstantRateEqualsConstantTimeDependentRate) {
  const auto g = presets::allee_pulse();
  const TransitionMechanism a(g, ConstantRate{0.9});
  const TransitionMechanism b(g, TimeDependentRate{Profile::constant(0.9), 2.0});
  for (double t = -50; t <= 50; t += 0.71) EXPECT_DOUBLE_EQ(a(t), b(t));
}

TEST(Mechanisms, TimeDependentPhaseReducesToPhase) {
  const auto ramp = presets::logistic_ramp();
  for (double sign : {-1.0, 1.0}) {
    const TransitionMechanism a(ramp, TimeDependentPhase{1.3, Profile::constant(4.0), 2.0, sign});
    const auto b = phase_problem(ramp, 1.3, 4.0, sign);
    for (double t = -20; t <= 20; t += 0.53) EXPECT_NEAR(a(t), b(t), 1e-15);
  }
}

TEST(Mechanisms, SwitchingJumpsOnceAtT0) {
  const auto ramp = presets::logistic_ramp();
  const TransitionMechanism sw(ramp, Switching{SwitchVariable::rate, 0.25, 0.74, 0.0});
  EXPECT_DOUBLE_EQ(sw(-0.001), TransitionMechanism(ramp, ConstantRate{0.25})(-0.001));
  EXPECT_DOUBLE_EQ(sw(0.001), TransitionMechanism(ramp, ConstantRate{0.74})(0.001));
  EXPECT_DOUBLE_EQ(sw.switch_side(false)(-3.0), ramp(-0.75));
  EXPECT_DOUBLE_EQ(sw.switch_side(true)(3.0), ramp(3.0 * 0.74));
  EXPECT_DOUBLE_EQ(sw.past_limit(), -1.0);
  EXPECT_DOUBLE_EQ(sw.future_limit(), 1.0);
}

TEST(Mechanisms, ReactionWithZeroStrengthIsTimeDependentRate) {
  const auto g = presets::holling_dip();
  const auto delta = Profile::arctan_step(20, 1, 10);
  const TransitionMechanism a(g, Reaction{delta, 0.0, 1.0, 0.0});
  const TransitionMechanism b(g, TimeDependentRate{delta, 1.0});
  for (double t = -100; t <= 100; t += 0.93) EXPECT_DOUBLE_EQ(a(t), b(t));
}

TEST(Mechanisms, ContinuityExceptSwitching) {
  const auto g = presets::allee_pulse();
  const TransitionMechanism ms[] = {
      TransitionMechanism(g, ConstantRate{1.0}), TransitionMechanism(g, PhaseShift{1.0, 3.0}),
      TransitionMechanism(g, TimeDependentRate{Profile::sigmoid_blend(0.5, 2.0), 1.0}),
      TransitionMechanism(g, Reaction{Profile::arctan_step(2, 1, 10), 0.5, 1.0, 3.0})};
  for (const auto& m : ms)
    for (double t = -30; t <= 30; t += 0.1) EXPECT_LT(std::abs(m(t + 1e-7) - m(t)), 1e-5);
}

TEST(Mechanisms, SizeRequiresTranslationFamily) {
  const TransitionMechanism size(presets::logistic_ramp(), SizeScale{2.0});
  EXPECT_THROW(require_compatible(presets::allee_rational(), size), config_error);
  EXPECT_NO_THROW(require_compatible(presets::logistic_migration(), size));
}

TEST(Mechanisms, LimitResidualShrinks) {
  const TransitionMechanism m(presets::allee_pulse(), ConstantRate{1.0});
  EXPECT_GT(limit_residual(m, 400), 1e-6);
  EXPECT_LT(limit_residual(m, 6400), 1e-6);
}
