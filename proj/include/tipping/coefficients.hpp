#ifndef TIPPING_COEFFICIENTS_HPP
#define TIPPING_COEFFICIENTS_HPP

// Time-dependent coefficient functions r(t), K(t), mu(t), ... of the
// population models. The catalog is closed: a constant plus a sum of
// trigonometric, rational, arctan and sigmoid terms. Bounds follow from the
// term amplitudes.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "tipping/error.hpp"

namespace tipping {

enum class TermShape { sine, cosine, sine_squared, rational, arctan, sigmoid };

inline std::string_view to_string(TermShape s) {
  switch (s) {
    case TermShape::sine: return "sin";
    case TermShape::cosine: return "cos";
    case TermShape::sine_squared: return "sin2";
    case TermShape::rational: return "rational";
    case TermShape::arctan: return "arctan";
    case TermShape::sigmoid: return "sigmoid";
  }
  return "?";
}

inline TermShape term_shape_from_string(std::string_view name) {
  if (name == "sin") return TermShape::sine;
  if (name == "cos") return TermShape::cosine;
  if (name == "sin2") return TermShape::sine_squared;
  if (name == "rational") return TermShape::rational;
  if (name == "arctan") return TermShape::arctan;
  if (name == "sigmoid") return TermShape::sigmoid;
  throw config_error("unknown trigonometric shape '" + std::string(name) + "'");
}

/// amplitude * shape(frequency * t + phase). For the periodic shapes the
/// frequency is in radians per time unit; rational is 1/(1+u^2), sigmoid is
/// 1/(1+exp(-u)).
struct Term {
  TermShape shape = TermShape::sine;
  double amplitude = 0.0;
  double frequency = 1.0;
  double phase = 0.0;

  double operator()(double t) const {
    const double arg = frequency * t + phase;
    switch (shape) {
      case TermShape::sine: return amplitude * std::sin(arg);
      case TermShape::cosine: return amplitude * std::cos(arg);
      case TermShape::sine_squared: {
        const double s = std::sin(arg);
        return amplitude * s * s;
      }
      case TermShape::rational: return amplitude / (1.0 + arg * arg);
      case TermShape::arctan: return amplitude * std::atan(arg);
      case TermShape::sigmoid:
        return arg >= 0.0 ? amplitude / (1.0 + std::exp(-arg))
                          : amplitude * std::exp(arg) / (1.0 + std::exp(arg));
    }
    return 0.0;
  }

  double lower_bound() const {
    switch (shape) {
      case TermShape::sine_squared:
      case TermShape::rational:
      case TermShape::sigmoid: return std::min(0.0, amplitude);
      case TermShape::arctan: return -std::abs(amplitude) * M_PI / 2;
      default: return -std::abs(amplitude);
    }
  }
  double upper_bound() const {
    switch (shape) {
      case TermShape::sine_squared:
      case TermShape::rational:
      case TermShape::sigmoid: return std::max(0.0, amplitude);
      case TermShape::arctan: return std::abs(amplitude) * M_PI / 2;
      default: return std::abs(amplitude);
    }
  }
};

class CoefficientFunction {
 public:
  CoefficientFunction() = default;
  explicit CoefficientFunction(double base, std::vector<Term> terms = {})
      : base_(base), terms_(std::move(terms)) {
    if (!std::isfinite(base_)) throw config_error("coefficient base level must be finite");
    for (const auto& term : terms_) {
      if (!std::isfinite(term.amplitude) || !std::isfinite(term.frequency) ||
          !std::isfinite(term.phase)) {
        throw config_error("coefficient term parameters must be finite");
      }
    }
  }

  static CoefficientFunction constant(double value) { return CoefficientFunction(value); }
  static CoefficientFunction sine(double base, double amplitude, double frequency,
                                  double phase = 0.0) {
    return CoefficientFunction(base, {{TermShape::sine, amplitude, frequency, phase}});
  }
  static CoefficientFunction sine_squared(double base, double amplitude, double frequency) {
    return CoefficientFunction(base, {{TermShape::sine_squared, amplitude, frequency, 0.0}});
  }

  double operator()(double t) const {
    double v = base_;
    for (const auto& term : terms_) v += term(t);
    return v;
  }

  double base() const noexcept { return base_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_constant() const noexcept { return terms_.empty(); }

  /// Guaranteed bounds from the term amplitudes (not necessarily attained).
  double lower_bound() const {
    double v = base_;
    for (const auto& term : terms_) v += term.lower_bound();
    return v;
  }
  double upper_bound() const {
    double v = base_;
    for (const auto& term : terms_) v += term.upper_bound();
    return v;
  }

  /// Minimum over a uniform grid of [t0, t1].
  double sampled_min(double t0 = 0.0, double t1 = 1e4, std::size_t samples = 1'000'001) const {
    double m = (*this)(t0);
    const double dt = (t1 - t0) / static_cast<double>(samples - 1);
    for (std::size_t i = 1; i < samples; ++i) m = std::min(m, (*this)(t0 + dt * static_cast<double>(i)));
    return m;
  }

  /// Positivity check used for coefficients that the model requires to be
  /// positively bounded from below.
  bool positively_bounded_below() const { return sampled_min() > 0.0; }

 private:
  double base_ = 0.0;
  std::vector<Term> terms_;
};

}  // namespace tipping

#endif  // TIPPING_COEFFICIENTS_HPP
