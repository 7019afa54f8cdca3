#ifndef TIPPING_MODELS_HPP
#define TIPPING_MODELS_HPP

// Catalog of nonautonomous single-species population models f(t, x, gamma)
// with closed-form x-derivatives. gamma is the external parameter driven by a
// transition mechanism; an optional additive shift lambda turns any model
// into x' = f(t, x, gamma) + lambda.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tipping/coefficients.hpp"
#include "tipping/error.hpp"
#include "tipping/interval.hpp"

namespace tipping {

enum class Concavity { concave, d_concave };

inline std::string_view to_string(Concavity c) {
  return c == Concavity::concave ? "concave" : "d-concave";
}

/// Anything the attractor, classification and warning-signal algorithms can
/// run on: a scalar vector field with analytic x-derivatives and a state box
/// that brackets its bounded dynamics.
template <class F>
concept ScalarField = requires(const F& m, double t, double x, double g) {
  { m.f(t, x, g) } -> std::convertible_to<double>;
  { m.fx(t, x, g) } -> std::convertible_to<double>;
  { m.fxx(t, x, g) } -> std::convertible_to<double>;
  { m.concavity() } -> std::convertible_to<Concavity>;
  { m.state_box() } -> std::convertible_to<Interval>;
};

enum class Family {
  concave_logistic_migration,
  gompertz,
  beverton_holt,
  allee_multiplicative_cubic,
  allee_multiplicative_rational,
  allee_holling2,
  holling_predation_linear_gamma,
};

inline constexpr std::array<Family, 7> kAllFamilies = {
    Family::concave_logistic_migration, Family::gompertz,
    Family::beverton_holt,              Family::allee_multiplicative_cubic,
    Family::allee_multiplicative_rational, Family::allee_holling2,
    Family::holling_predation_linear_gamma};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::concave_logistic_migration: return "concave-logistic-migration";
    case Family::gompertz: return "gompertz";
    case Family::beverton_holt: return "beverton-holt";
    case Family::allee_multiplicative_cubic: return "allee-multiplicative-cubic";
    case Family::allee_multiplicative_rational: return "allee-multiplicative-rational";
    case Family::allee_holling2: return "allee-holling2";
    case Family::holling_predation_linear_gamma: return "holling-predation-linear-gamma";
  }
  return "?";
}

inline Family family_from_string(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  // The Greek spelling appears in older configs.
  if (name == "holling-predation-linear-γ") return Family::holling_predation_linear_gamma;
  throw config_error("unknown model family '" + std::string(name) + "'");
}

namespace detail {

struct FamilyTraits {
  Concavity concavity;
  std::vector<std::string_view> required;
  std::vector<std::string_view> optional;  // defaults to the constant 1
  std::vector<std::string_view> positive;  // must be positively bounded below
  Interval box;
};

inline const FamilyTraits& traits(Family f) {
  static const std::map<Family, FamilyTraits> table = {
      {Family::concave_logistic_migration,
       {Concavity::concave, {"r", "I"}, {}, {"r"}, {-5.0, 5.0}}},
      {Family::gompertz,
       {Concavity::concave, {"r", "K"}, {"phi"}, {"r", "K"}, {0.1, 100.0}}},
      {Family::beverton_holt,
       {Concavity::concave, {"r", "alpha"}, {"phi"}, {"r", "alpha"}, {0.0, 100.0}}},
      {Family::allee_multiplicative_cubic,
       {Concavity::d_concave, {"r", "K", "S"}, {"phi"}, {"r", "K"}, {0.0, 100.0}}},
      {Family::allee_multiplicative_rational,
       {Concavity::d_concave, {"r", "K", "mu", "nu"}, {"phi"}, {"r", "K", "nu"}, {0.0, 100.0}}},
      {Family::allee_holling2,
       {Concavity::d_concave, {"r", "K", "a", "b"}, {"phi"}, {"r", "K", "a", "b"}, {0.0, 100.0}}},
      {Family::holling_predation_linear_gamma,
       {Concavity::d_concave, {"r", "K", "a0", "a1", "b"}, {}, {"r", "K", "b"}, {2.0, 120.0}}},
  };
  return table.at(f);
}

}  // namespace detail

/// Parameter map handed to make_model: coefficient name -> function.
using CoefficientSpec = std::map<std::string, CoefficientFunction, std::less<>>;

class VectorFieldModel {
 public:
  Family family() const noexcept { return family_; }
  Concavity concavity() const noexcept { return detail::traits(family_).concavity; }
  Interval state_box() const noexcept { return box_; }
  double additive_shift() const noexcept { return shift_; }
  const CoefficientSpec& coefficients() const noexcept { return spec_; }

  VectorFieldModel with_state_box(Interval box) const {
    if (box.empty()) throw config_error("state box must be a nonempty interval");
    VectorFieldModel copy = *this;
    copy.box_ = box;
    return copy;
  }

  /// x' = f(t, x, gamma) + lambda.
  VectorFieldModel with_additive_shift(double lambda) const {
    VectorFieldModel copy = *this;
    copy.shift_ = lambda;
    return copy;
  }

  /// Models of the form h(t, x - gamma), the only ones the size mechanism
  /// accepts.
  bool is_translation_family() const noexcept {
    return family_ == Family::concave_logistic_migration;
  }

  /// Smallest admissible state (pole or logarithm boundary); -inf if none.
  double domain_lower_bound(double t) const {
    switch (family_) {
      case Family::gompertz: return 0.0;
      case Family::beverton_holt: return -1.0 / c_[kAlpha](t);
      case Family::allee_multiplicative_rational: return -c_[kNu](t);
      case Family::allee_holling2:
      case Family::holling_predation_linear_gamma: return -c_[kB](t);
      default: return -HUGE_VAL;
    }
  }

  double f(double t, double x, double gamma) const {
    switch (family_) {
      case Family::concave_logistic_migration: {
        const double y = x - gamma;
        return -c_[kR](t) * y * y + c_[kI](t) + shift_;
      }
      case Family::gompertz: {
        if (!(x > 0.0)) throw domain_error("gompertz model evaluated at x <= 0");
        return -c_[kR](t) * x * std::log(x / c_[kK](t)) + gamma * c_[kPhi](t) + shift_;
      }
      case Family::beverton_holt: {
        const double den = 1.0 + c_[kAlpha](t) * x;
        if (!(den > 0.0)) throw domain_error("beverton-holt model evaluated at 1 + alpha x <= 0");
        return x * ((1.0 + c_[kR](t)) / den - 1.0) + gamma * c_[kPhi](t) + shift_;
      }
      case Family::allee_multiplicative_cubic: {
        const auto p = cubic_coefficients(t);
        return ((p[3] * x + p[2]) * x + p[1]) * x + gamma * c_[kPhi](t) + shift_;
      }
      case Family::allee_multiplicative_rational: {
        const auto q = rational_parts(t);
        const double u = x + q.nu;
        if (!(u > 0.0)) throw domain_error("rational Allee model evaluated at or beyond its pole x = -nu(t)");
        return (q.q2 * x + q.q1) * x + q.q0 + q.rem / u + gamma * c_[kPhi](t) + shift_;
      }
      case Family::allee_holling2: {
        const double r = c_[kR](t), k = c_[kK](t), a = c_[kA](t), b = c_[kB](t);
        if (!(x + b > 0.0)) throw domain_error("Holling model evaluated at or beyond its pole x = -b(t)");
        return r * x * (1.0 - x / k) - a * x / (x + b) + gamma * c_[kPhi](t) + shift_;
      }
      case Family::holling_predation_linear_gamma: {
        const double r = c_[kR](t), k = c_[kK](t), b = c_[kB](t);
        const double a = c_[kA0](t) - c_[kA1](t) * gamma;
        if (!(x + b > 0.0)) throw domain_error("Holling model evaluated at or beyond its pole x = -b(t)");
        return r * x * (1.0 - x / k) - a * x / (x + b) + shift_;
      }
    }
    return 0.0;
  }

  double fx(double t, double x, double gamma) const {
    switch (family_) {
      case Family::concave_logistic_migration:
        return -2.0 * c_[kR](t) * (x - gamma);
      case Family::gompertz: {
        if (!(x > 0.0)) throw domain_error("gompertz model evaluated at x <= 0");
        return -c_[kR](t) * (std::log(x / c_[kK](t)) + 1.0);
      }
      case Family::beverton_holt: {
        const double den = 1.0 + c_[kAlpha](t) * x;
        if (!(den > 0.0)) throw domain_error("beverton-holt model evaluated at 1 + alpha x <= 0");
        return (1.0 + c_[kR](t)) / (den * den) - 1.0;
      }
      case Family::allee_multiplicative_cubic: {
        const auto p = cubic_coefficients(t);
        return (3.0 * p[3] * x + 2.0 * p[2]) * x + p[1];
      }
      case Family::allee_multiplicative_rational: {
        const auto q = rational_parts(t);
        const double u = x + q.nu;
        if (!(u > 0.0)) throw domain_error("rational Allee model evaluated at or beyond its pole x = -nu(t)");
        return 2.0 * q.q2 * x + q.q1 - q.rem / (u * u);
      }
      case Family::allee_holling2: {
        const double r = c_[kR](t), k = c_[kK](t), a = c_[kA](t), b = c_[kB](t);
        const double u = x + b;
        if (!(u > 0.0)) throw domain_error("Holling model evaluated at or beyond its pole x = -b(t)");
        return r * (1.0 - 2.0 * x / k) - a * b / (u * u);
      }
      case Family::holling_predation_linear_gamma: {
        const double r = c_[kR](t), k = c_[kK](t), b = c_[kB](t);
        const double a = c_[kA0](t) - c_[kA1](t) * gamma;
        const double u = x + b;
        if (!(u > 0.0)) throw domain_error("Holling model evaluated at or beyond its pole x = -b(t)");
        return r * (1.0 - 2.0 * x / k) - a * b / (u * u);
      }
    }
    return 0.0;
  }

  /// Second x-derivative; provided for the d-concave families only.
  double fxx(double t, double x, double gamma) const {
    switch (family_) {
      case Family::allee_multiplicative_cubic: {
        const auto p = cubic_coefficients(t);
        return 6.0 * p[3] * x + 2.0 * p[2];
      }
      case Family::allee_multiplicative_rational: {
        const auto q = rational_parts(t);
        const double u = x + q.nu;
        if (!(u > 0.0)) throw domain_error("rational Allee model evaluated at or beyond its pole x = -nu(t)");
        return 2.0 * q.q2 + 2.0 * q.rem / (u * u * u);
      }
      case Family::allee_holling2: {
        const double r = c_[kR](t), k = c_[kK](t), a = c_[kA](t), b = c_[kB](t);
        const double u = x + b;
        if (!(u > 0.0)) throw domain_error("Holling model evaluated at or beyond its pole x = -b(t)");
        return -2.0 * r / k + 2.0 * a * b / (u * u * u);
      }
      case Family::holling_predation_linear_gamma: {
        const double r = c_[kR](t), k = c_[kK](t), b = c_[kB](t);
        const double a = c_[kA0](t) - c_[kA1](t) * gamma;
        const double u = x + b;
        if (!(u > 0.0)) throw domain_error("Holling model evaluated at or beyond its pole x = -b(t)");
        return -2.0 * r / k + 2.0 * a * b / (u * u * u);
      }
      default:
        throw domain_error("f_xx is not provided for the concave family " +
                           std::string(to_string(family_)));
    }
  }

  /// Partial derivative with respect to the external parameter.
  double fgamma(double t, double x, double gamma) const {
    switch (family_) {
      case Family::concave_logistic_migration: return 2.0 * c_[kR](t) * (x - gamma);
      case Family::holling_predation_linear_gamma:
        return c_[kA1](t) * x / (x + c_[kB](t));
      default: return c_[kPhi](t);
    }
  }

 private:
  friend VectorFieldModel make_model(Family, const CoefficientSpec&);

  enum Slot { kR, kK, kMu, kNu, kPhi, kI, kA, kB, kS, kAlpha, kA0, kA1, kSlots };

  static int slot_of(std::string_view name) {
    static const std::map<std::string_view, int> slots = {
        {"r", kR},     {"K", kK},         {"mu", kMu}, {"nu", kNu}, {"phi", kPhi},
        {"I", kI},     {"a", kA},         {"b", kB},   {"S", kS},   {"alpha", kAlpha},
        {"a0", kA0},   {"a1", kA1}};
    auto it = slots.find(name);
    return it == slots.end() ? -1 : it->second;
  }

  // x (1 - x/K)(x - S) r / K expanded as p3 x^3 + p2 x^2 + p1 x.
  std::array<double, 4> cubic_coefficients(double t) const {
    const double r = c_[kR](t), k = c_[kK](t), s = c_[kS](t);
    const double g = r / k;
    return {0.0, -g * s, g * (1.0 + s / k), -g / k};
  }

  struct RationalParts {
    double q2, q1, q0, rem, nu;
  };

  // r x (1 - x/K)(x - mu) / (nu + x) written as q2 x^2 + q1 x + q0 + rem/(x + nu).
  RationalParts rational_parts(double t) const {
    const double r = c_[kR](t), k = c_[kK](t), mu = c_[kMu](t), nu = c_[kNu](t);
    const double p3 = -r / k;
    const double p2 = r * (1.0 + mu / k);
    const double p1 = -r * mu;
    const double q2 = p3;
    const double q1 = p2 - nu * q2;
    const double q0 = p1 - nu * q1;
    return {q2, q1, q0, -nu * q0, nu};
  }

  Family family_ = Family::concave_logistic_migration;
  std::array<CoefficientFunction, kSlots> c_{};
  CoefficientSpec spec_;
  Interval box_{};
  double shift_ = 0.0;
};

inline VectorFieldModel make_model(Family family, const CoefficientSpec& spec) {
  const auto& tr = detail::traits(family);
  VectorFieldModel m;
  m.family_ = family;
  m.box_ = tr.box;
  for (auto& c : m.c_) c = CoefficientFunction::constant(1.0);

  for (const auto& [name, fn] : spec) {
    const bool known =
        std::find(tr.required.begin(), tr.required.end(), name) != tr.required.end() ||
        std::find(tr.optional.begin(), tr.optional.end(), name) != tr.optional.end();
    if (!known) {
      throw config_error("coefficient '" + name + "' is not used by family " +
                         std::string(to_string(family)));
    }
    m.c_[VectorFieldModel::slot_of(name)] = fn;
  }
  for (auto name : tr.required) {
    if (spec.find(name) == spec.end()) {
      throw config_error("family " + std::string(to_string(family)) +
                         " requires coefficient '" + std::string(name) + "'");
    }
  }
  for (auto name : tr.positive) {
    const auto& fn = m.c_[VectorFieldModel::slot_of(name)];
    const double lo = fn.is_constant() ? fn.base() : fn.sampled_min();
    if (!(lo > 0.0)) {
      throw config_error("coefficient '" + std::string(name) +
                         "' must be positively bounded from below");
    }
  }
  if (family == Family::allee_multiplicative_rational) {
    const CoefficientFunction& mu = m.c_[VectorFieldModel::kMu];
    const CoefficientFunction& nu = m.c_[VectorFieldModel::kNu];
    std::vector<Term> terms = mu.terms();
    terms.insert(terms.end(), nu.terms().begin(), nu.terms().end());
    const CoefficientFunction sum(mu.base() + nu.base(), terms);
    if (!(sum.sampled_min() > 0.0)) {
      throw config_error("nu + mu must be positively bounded from below");
    }
  }
  if (family == Family::allee_multiplicative_cubic) {
    const CoefficientFunction& k = m.c_[VectorFieldModel::kK];
    const CoefficientFunction& s = m.c_[VectorFieldModel::kS];
    std::vector<Term> terms = k.terms();
    terms.insert(terms.end(), s.terms().begin(), s.terms().end());
    const CoefficientFunction sum(k.base() + s.base(), terms);
    if (sum.sampled_min() < 0.0) throw config_error("K + S must be nonnegative");
  }
  m.spec_ = spec;
  return m;
}

inline VectorFieldModel make_model(std::string_view family, const CoefficientSpec& spec) {
  return make_model(family_from_string(family), spec);
}

/// Result of sampling the strict (d-)concavity difference quotients.
struct ConcavityReport {
  Concavity concavity = Concavity::concave;
  double min_quotient = 0.0;
  double max_quotient = 0.0;
  double delta = 0.0;  // -max_quotient; positive when the check passes
  bool pass = false;
};

/// Samples the difference quotient of f_x (concave) or f_xx (d-concave)
/// between neighbouring points of a uniform grid of the state box, at
/// `t_samples` times in [0, t_span] and for every gamma given.
template <ScalarField F>
ConcavityReport check_concavity_class(const F& field, Interval box, std::size_t t_samples,
                                      std::span<const double> gammas,
                                      std::size_t x_samples = 201, double t_span = 1000.0) {
  if (box.empty()) throw config_error("concavity check needs a nonempty state box");
  if (t_samples == 0 || x_samples < 2) throw config_error("concavity check needs samples");
  ConcavityReport rep;
  rep.concavity = field.concavity();
  rep.min_quotient = HUGE_VAL;
  rep.max_quotient = -HUGE_VAL;
  const double dx = box.width() / static_cast<double>(x_samples - 1);
  const double dt = t_samples > 1 ? t_span / static_cast<double>(t_samples - 1) : 0.0;
  const bool dconcave = rep.concavity == Concavity::d_concave;
  for (std::size_t i = 0; i < t_samples; ++i) {
    const double t = dt * static_cast<double>(i);
    for (double g : gammas) {
      auto deriv = [&](double x) { return dconcave ? field.fxx(t, x, g) : field.fx(t, x, g); };
      double prev = deriv(box.lo);
      for (std::size_t j = 1; j < x_samples; ++j) {
        const double cur = deriv(box.lo + dx * static_cast<double>(j));
        const double q = (cur - prev) / dx;
        rep.min_quotient = std::min(rep.min_quotient, q);
        rep.max_quotient = std::max(rep.max_quotient, q);
        prev = cur;
      }
    }
  }
  rep.delta = -rep.max_quotient;
  rep.pass = rep.max_quotient < 0.0;
  return rep;
}

template <ScalarField F>
ConcavityReport check_concavity_class(const F& field, Interval box, std::size_t t_samples) {
  const double zero = 0.0;
  return check_concavity_class(field, box, t_samples, std::span<const double>(&zero, 1));
}

}  // namespace tipping

#endif  // TIPPING_MODELS_HPP
