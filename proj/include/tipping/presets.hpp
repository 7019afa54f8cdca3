#ifndef TIPPING_PRESETS_HPP
#define TIPPING_PRESETS_HPP

// Ready-made models and profiles of the bundled experiments.

#include <cmath>

#include "tipping/models.hpp"
#include "tipping/transitions.hpp"

namespace tipping::presets {

inline constexpr double kSqrt5 = 2.23606797749978969640917366873128;

/// Rational Allee model with migration gamma * phi(t).
inline VectorFieldModel allee_rational() {
  using CF = CoefficientFunction;
  return make_model(Family::allee_multiplicative_rational,
                    {{"r", CF::sine_squared(1.5, 1.0, 0.25)},
                     {"K", CF::sine_squared(40.0, 40.0, kSqrt5 / 16.0)},
                     {"mu", CF::sine_squared(30.0, 30.0, 0.25)},
                     {"nu", CF::sine_squared(40.0, 40.0, kSqrt5 / 16.0)},
                     {"phi", CF::sine_squared(0.75, 0.5, kSqrt5 / 2.0)}});
}

/// Pulse dipping from 1.5 to 0.8 at t = 0.
inline Profile allee_pulse() { return Profile::cauchy_pulse(1.5, 0.8, 0.02386); }

/// x' = -(x - gamma)^2 + I(t), I(t) = -sin(t/2) - sin(sqrt(5) t) + 0.895.
inline VectorFieldModel logistic_migration() {
  using CF = CoefficientFunction;
  return make_model(Family::concave_logistic_migration,
                    {{"r", CF::constant(1.0)},
                     {"I", CF(0.895, {{TermShape::sine, -1.0, 0.5, 0.0},
                                      {TermShape::sine, -1.0, kSqrt5, 0.0}})}});
}

/// (2/pi) atan(t).
inline Profile logistic_ramp() { return Profile::arctan_ramp(2.0 / std::numbers::pi); }

/// r x (1 - x/K) - (52 - 13 gamma) x / (x + 10).
inline VectorFieldModel holling_predation() {
  using CF = CoefficientFunction;
  return make_model(Family::holling_predation_linear_gamma,
                    {{"r", CF::sine(2.0, 1.0, 1.0)},
                     {"K", CF::sine_squared(90.0, 18.0, kSqrt5 / 2.0)},
                     {"a0", CF::constant(52.0)},
                     {"a1", CF::constant(13.0)},
                     {"b", CF::constant(10.0)}});
}

/// -550 / (1000 + t^2).
inline Profile holling_dip() { return Profile::rational_dip(0.0, 550.0, 1000.0); }

}  // namespace tipping::presets

#endif  // TIPPING_PRESETS_HPP
