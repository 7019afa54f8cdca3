#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "tipping/attractors.hpp"
#include "tipping/integrator.hpp"
#include "tipping/presets.hpp"

using namespace tipping;

TEST(Integrator, ExponentialDecay) {
  auto rhs = [](double, double x) { return -x; };
  const auto tr = integrate(rhs, 0.0, 1.0, 1.0);
  ASSERT_TRUE(tr.completed());
  EXPECT_NEAR(tr.final_state(), std::exp(-1.0), 1e-9);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_EQ(tr(tr.times()[i]), tr.states()[i]);
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const double m = 0.5 * (tr.times()[i] + tr.times()[i + 1]);
    EXPECT_NEAR(tr(m), std::exp(-m), 1e-8);
  }
}

TEST(Integrator, FixedStepRk4) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4;
  cfg.fixed_step = 1e-3;
  const auto tr = integrate([](double, double x) { return -x; }, 0.0, 1.0, 1.0, cfg);
  EXPECT_NEAR(tr.final_state(), std::exp(-1.0), 1e-12);
}

TEST(Integrator, BlowUpOfQuadratic) {
  const auto tr = integrate([](double, double x) { return x * x; }, 0.0, 1.0, 5.0);
  ASSERT_FALSE(tr.completed());
  EXPECT_NEAR(tr.blow_up()->time, 1.0, 1e-4);
  EXPECT_EQ(tr.blow_up()->sign, 1);
  EXPECT_LE(tr.t_max(), tr.blow_up()->time);
}

TEST(Integrator, BackwardBlowUp) {
  // x' = -x^2 backward from x(0) = 1 escapes at t = -1.
  const auto tr = integrate([](double, double x) { return -x * x; }, 0.0, 1.0, -5.0);
  ASSERT_FALSE(tr.completed());
  EXPECT_NEAR(tr.blow_up()->time, -1.0, 1e-4);
}

TEST(Integrator, Errors) {
  auto rhs = [](double, double x) { return -x; };
  EXPECT_THROW(integrate(rhs, 1.0, 1.0, 1.0), config_error);
  EXPECT_THROW(integrate(rhs, 0.0, std::nan(""), 1.0), config_error);
  EXPECT_THROW(integrate([](double, double) { return std::nan(""); }, 0.0, 1.0, 1.0), numerical_error);
  IntegratorConfig tiny;
  tiny.max_steps = 3;
  tiny.max_step = 1e-3;
  EXPECT_THROW(integrate(rhs, 0.0, 1.0, 1.0, tiny), numerical_error);
  const auto tr = integrate(rhs, 0.0, 1.0, 1.0);
  EXPECT_THROW(tr(1.5), numerical_error);
}

TEST(Integrator, StopTimesAreNodes) {
  const std::vector<double> stops = {0.123, 0.5, 0.777};
  const auto tr = integrate([](double t, double x) { return std::sin(t) - x; }, 0.0, 1.0, 1.0, {}, stops);
  for (double s : stops) {
    EXPECT_TRUE(std::find(tr.times().begin(), tr.times().end(), s) != tr.times().end()) << s;
  }
}

TEST(Integrator, MidpointAgreesWithForcedNode) {
  const auto m = presets::allee_rational();
  const TransitionMechanism mech(presets::allee_pulse(), ConstantRate{1.01});
  auto rhs = [&](double t, double x) { return m.f(t, x, mech(t)); };
  const auto a = integrate(rhs, -50.0, 60.0, 50.0);
  const IntegratorConfig cfg;
  for (std::size_t i = 10; i + 1 < a.size(); i += 37) {
    const double q = 0.5 * (a.times()[i] + a.times()[i + 1]);
    const auto b = integrate(rhs, -50.0, 60.0, 50.0, cfg, {q});
    EXPECT_NEAR(a(q), b(q), 10 * cfg.rel_tol * std::max(1.0, std::abs(b(q)))) << q;
  }
}

TEST(Integrator, AlleeTrackingRunAndHalfStepCrossCheck) {
  const auto m = presets::allee_rational();
  const TransitionMechanism mech(presets::allee_pulse(), ConstantRate{1.01});
  const auto past = limit_hyperbolic_solutions(m, 1.5, Interval{-400.0, -399.0});
  const auto future = limit_hyperbolic_solutions(m, 1.5, Interval{399.0, 400.0});
  auto rhs = [&](double t, double x) { return m.f(t, x, mech(t)); };
  const auto tr = integrate(rhs, -400.0, past.get(Role::upper_attractive)(-400.0), 400.0);
  ASSERT_TRUE(tr.completed());
  EXPECT_NEAR(tr.final_state(), future.get(Role::upper_attractive)(400.0), 1e-3);
  IntegratorConfig half;
  half.max_step = 0.5;
  const auto tr2 = integrate(rhs, -400.0, past.get(Role::upper_attractive)(-400.0), 400.0, half);
  EXPECT_NEAR(tr.final_state(), tr2.final_state(), 1e-6);
}

TEST(Integrator, HalvingTolerancesChangesLittle) {
  const auto m = presets::allee_rational();
  const TransitionMechanism mech(presets::allee_pulse(), ConstantRate{1.01});
  auto rhs = [&](double t, double x) { return m.f(t, x, mech(t)); };
  IntegratorConfig tight;
  tight.rel_tol /= 2;
  tight.abs_tol /= 2;
  const auto a = integrate(rhs, -100.0, 60.0, 100.0);
  const auto b = integrate(rhs, -100.0, 60.0, 100.0, tight);
  EXPECT_LT(std::abs(a.final_state() - b.final_state()), 10 * tight.rel_tol * std::abs(b.final_state()));
}

TEST(Integrator, TimeReversalDuality) {
  const auto m = presets::holling_predation();
  const double g = 0.3;
  auto h = [&](double t, double x) { return m.f(t, x, g); };
  auto dual = [&](double s, double y) { return -m.f(-s, y, g); };
  const auto back = integrate(h, 10.0, 45.0, -10.0);
  const auto fwd = integrate(dual, -10.0, 45.0, 10.0);
  ASSERT_TRUE(back.completed());
  ASSERT_TRUE(fwd.completed());
  EXPECT_EQ(back.direction(), Direction::backward);
  for (double t = -10.0; t <= 10.0; t += 0.25) EXPECT_NEAR(back(t), fwd(-t), 1e-8 * (1 + std::abs(back(t)))) << t;
}

namespace {

struct Draw {
  VectorFieldModel model;
  TransitionMechanism mech;
};

Draw random_draw(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_real_distribution<double> rate(0.3, 3.0);
  switch (pick(rng)) {
    case 0: return {presets::allee_rational(), TransitionMechanism(presets::allee_pulse(), ConstantRate{rate(rng)})};
    case 1: return {presets::logistic_migration(), TransitionMechanism(presets::logistic_ramp(), ConstantRate{rate(rng)})};
    default:
      return {presets::holling_predation(), TransitionMechanism(presets::holling_dip(), ConstantRate{10 * rate(rng)})};
  }
}

}  // namespace

TEST(Integrator, OrderPreservationOnRandomDraws) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 100; ++k) {
    const auto d = random_draw(rng);
    const Interval box = d.model.state_box();
    std::uniform_real_distribution<double> X(box.lo + 0.5, box.hi - 0.5), T(-50.0, 50.0);
    double x0 = X(rng), y0 = X(rng);
    if (x0 > y0) std::swap(x0, y0);
    if (y0 - x0 < 1e-3) y0 = x0 + 1e-3;
    const double t0 = T(rng);
    auto rhs = [&](double t, double x) { return d.model.f(t, x, d.mech(t)); };
    const auto a = integrate(rhs, t0, x0, t0 + 20.0);
    const auto b = integrate(rhs, t0, y0, t0 + 20.0);
    const double hi = std::min(a.t_max(), b.t_max());
    // Once contraction brings the solutions within the local error of two
    // independent adaptive runs, their order is only known up to that error.
    const double slack = 10 * IntegratorConfig{}.rel_tol;
    for (double t : a.times()) {
      if (t > hi) break;
      ASSERT_LE(a(t), b(t) + slack * (1 + std::abs(b(t)))) << "draw " << k << " t=" << t << " gap " << a(t) - b(t);
    }
    EXPECT_LT(a.states().front(), b.states().front());
  }
}

TEST(Integrator, ComparisonInRhsOnRandomDraws) {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 100; ++k) {
    const auto d = random_draw(rng);
    const Interval box = d.model.state_box();
    std::uniform_real_distribution<double> X(box.lo + 0.5, box.hi - 0.5), E(0.0, 0.5);
    const double x0 = X(rng), eps = E(rng);
    auto lo = [&](double t, double x) { return d.model.f(t, x, d.mech(t)); };
    auto hi = [&](double t, double x) { return d.model.f(t, x, d.mech(t)) + eps * (1 + std::sin(t)); };
    const auto a = integrate(lo, 0.0, x0, 15.0);
    const auto b = integrate(hi, 0.0, x0, 15.0);
    const double end = std::min(a.t_max(), b.t_max());
    for (double t : a.times()) {
      if (t > end) break;
      ASSERT_LE(a(t), b(t) + 1e-9 * (1 + std::abs(b(t)))) << "draw " << k << " t=" << t;
    }
  }
}

TEST(Integrator, CsvExport) {
  const auto tr = integrate([](double, double x) { return -x; }, 0.0, 1.0, 0.1);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream is(os.str());
  std::string header, line;
  std::getline(is, header);
  EXPECT_EQ(header, "t,x");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    EXPECT_EQ(std::stod(line.substr(0, comma)), tr.times()[rows]);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), tr.states()[rows]);
    ++rows;
  }
  EXPECT_EQ(rows, tr.size());
}
