#ifndef TIPPING_TRANSITIONS_HPP
#define TIPPING_TRANSITIONS_HPP

// Transition profiles Gamma(t), rate/phase profiles Delta(t) and the
// mechanisms combining them into the effective parameter path t -> Gamma^c(t)
// fed to x' = f(t, x, Gamma^c(t)).

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>

#include "tipping/error.hpp"

namespace tipping {

enum class ProfileKind {
  constant,      // value
  cauchy_pulse,  // gamma_plus + (gamma_star - gamma_plus) / (1 + b t^2)
  arctan_ramp,   // offset + scale * atan(t)
  sigmoid_blend, // v_minus / (1 + e^t) + v_plus / (1 + e^-t)
  rational_dip,  // base - amplitude / (offset + scale t^2)
  arctan_step,   // base - amplitude * (atan(t / width) / pi + 1/2)
};

inline std::string_view to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::constant: return "constant";
    case ProfileKind::cauchy_pulse: return "cauchy-pulse";
    case ProfileKind::arctan_ramp: return "arctan-ramp";
    case ProfileKind::sigmoid_blend: return "sigmoid-blend";
    case ProfileKind::rational_dip: return "rational-dip";
    case ProfileKind::arctan_step: return "arctan-step";
  }
  return "?";
}

/// A closed-form scalar function of time with finite limits at -inf and
/// +inf. Serves both as transition profile Gamma and as rate/phase
/// profile Delta.
class Profile {
 public:
  Profile() = default;

  static Profile constant(double value) { return Profile(ProfileKind::constant, {value}); }

  static Profile cauchy_pulse(double gamma_plus, double gamma_star, double b) {
    if (!(b > 0.0)) throw config_error("cauchy-pulse width parameter b must be positive");
    return Profile(ProfileKind::cauchy_pulse, {gamma_plus, gamma_star, b});
  }

  static Profile arctan_ramp(double scale, double offset = 0.0) {
    return Profile(ProfileKind::arctan_ramp, {scale, offset});
  }

  static Profile sigmoid_blend(double v_minus, double v_plus) {
    return Profile(ProfileKind::sigmoid_blend, {v_minus, v_plus});
  }

  static Profile rational_dip(double base, double amplitude, double offset, double scale = 1.0) {
    if (!(offset > 0.0) || !(scale >= 0.0)) {
      throw config_error("rational-dip needs offset > 0 and scale >= 0");
    }
    return Profile(ProfileKind::rational_dip, {base, amplitude, offset, scale});
  }

  static Profile arctan_step(double base, double amplitude, double width) {
    if (!(width > 0.0)) throw config_error("arctan-step width must be positive");
    return Profile(ProfileKind::arctan_step, {base, amplitude, width});
  }

  ProfileKind kind() const noexcept { return kind_; }
  const std::array<double, 4>& params() const noexcept { return p_; }

  double operator()(double t) const {
    switch (kind_) {
      case ProfileKind::constant: return p_[0];
      case ProfileKind::cauchy_pulse: return p_[0] + (p_[1] - p_[0]) / (1.0 + p_[2] * t * t);
      case ProfileKind::arctan_ramp: return p_[1] + p_[0] * std::atan(t);
      case ProfileKind::sigmoid_blend: {
        // 1/(1+e^t) written so that neither branch overflows.
        const double left = t > 0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
        return p_[0] * left + p_[1] * (1.0 - left);
      }
      case ProfileKind::rational_dip: return p_[0] - p_[1] / (p_[2] + p_[3] * t * t);
      case ProfileKind::arctan_step:
        return p_[0] - p_[1] * (std::atan(t / p_[2]) / std::numbers::pi + 0.5);
    }
    return 0.0;
  }

  double limit_minus() const {
    switch (kind_) {
      case ProfileKind::constant: return p_[0];
      case ProfileKind::cauchy_pulse: return p_[0];
      case ProfileKind::arctan_ramp: return p_[1] - p_[0] * std::numbers::pi / 2.0;
      case ProfileKind::sigmoid_blend: return p_[0];
      case ProfileKind::rational_dip: return p_[3] > 0.0 ? p_[0] : p_[0] - p_[1] / p_[2];
      case ProfileKind::arctan_step: return p_[0];
    }
    return 0.0;
  }

  double limit_plus() const {
    switch (kind_) {
      case ProfileKind::constant: return p_[0];
      case ProfileKind::cauchy_pulse: return p_[0];
      case ProfileKind::arctan_ramp: return p_[1] + p_[0] * std::numbers::pi / 2.0;
      case ProfileKind::sigmoid_blend: return p_[1];
      case ProfileKind::rational_dip: return p_[3] > 0.0 ? p_[0] : p_[0] - p_[1] / p_[2];
      case ProfileKind::arctan_step: return p_[0] - p_[1];
    }
    return 0.0;
  }

  /// Infimum over the real line in closed form.
  double infimum() const {
    switch (kind_) {
      case ProfileKind::constant: return p_[0];
      case ProfileKind::cauchy_pulse: return std::min(p_[0], p_[1]);
      case ProfileKind::arctan_ramp:
      case ProfileKind::sigmoid_blend:
      case ProfileKind::arctan_step: return std::min(limit_minus(), limit_plus());
      case ProfileKind::rational_dip:
        return p_[1] >= 0.0 ? p_[0] - p_[1] / p_[2] : limit_plus();
    }
    return 0.0;
  }

  double supremum() const {
    switch (kind_) {
      case ProfileKind::constant: return p_[0];
      case ProfileKind::cauchy_pulse: return std::max(p_[0], p_[1]);
      case ProfileKind::arctan_ramp:
      case ProfileKind::sigmoid_blend:
      case ProfileKind::arctan_step: return std::max(limit_minus(), limit_plus());
      case ProfileKind::rational_dip:
        return p_[1] >= 0.0 ? limit_plus() : p_[0] - p_[1] / p_[2];
    }
    return 0.0;
  }

  /// Rate profiles must be strictly positive on the whole line.
  void require_positive(std::string_view what) const {
    if (!(infimum() > 0.0)) {
      throw config_error(std::string(what) + " profile must be strictly positive");
    }
  }

 private:
  Profile(ProfileKind kind, std::initializer_list<double> params) : kind_(kind) {
    std::size_t i = 0;
    for (double v : params) {
      if (!std::isfinite(v)) throw config_error("profile parameters must be finite");
      p_[i++] = v;
    }
  }

  ProfileKind kind_ = ProfileKind::constant;
  std::array<double, 4> p_{};
};

using TransitionProfile = Profile;
using RateProfile = Profile;

using ProfileParams = std::map<std::string, double, std::less<>>;

namespace detail {
inline double param(const ProfileParams& p, std::string_view key) {
  auto it = p.find(key);
  if (it == p.end()) throw config_error("profile parameter '" + std::string(key) + "' missing");
  return it->second;
}
inline double param(const ProfileParams& p, std::string_view key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}
}  // namespace detail

/// Builds a profile from its catalog name and a parameter map.
inline Profile make_profile(std::string_view kind, const ProfileParams& p) {
  using detail::param;
  if (kind == "constant") return Profile::constant(param(p, "value"));
  if (kind == "cauchy-pulse") {
    return Profile::cauchy_pulse(param(p, "gamma_plus"), param(p, "gamma_star"), param(p, "b"));
  }
  if (kind == "arctan-ramp") return Profile::arctan_ramp(param(p, "scale"), param(p, "offset", 0.0));
  if (kind == "sigmoid-blend") return Profile::sigmoid_blend(param(p, "v_minus"), param(p, "v_plus"));
  if (kind == "rational-dip") {
    return Profile::rational_dip(param(p, "base"), param(p, "amplitude"), param(p, "offset"),
                                 param(p, "scale", 1.0));
  }
  if (kind == "arctan-step") {
    return Profile::arctan_step(param(p, "base"), param(p, "amplitude"), param(p, "width"));
  }
  throw config_error("unknown profile kind '" + std::string(kind) + "'");
}

/// Same as make_profile, additionally requiring strict positivity.
inline Profile make_rate_profile(std::string_view kind, const ProfileParams& p) {
  Profile prof = make_profile(kind, p);
  prof.require_positive("rate");
  return prof;
}

// Mechanism kinds. Each maps time to the argument fed to Gamma, or (size) to
// a multiple of Gamma.

struct ConstantRate {
  double c = 1.0;  // Gamma(c t)
};

struct PhaseShift {
  double c = 1.0;       // Gamma(c (t + offset))
  double offset = 0.0;
};

struct SizeScale {
  double c = 1.0;  // c Gamma(t)
};

struct TimeDependentRate {
  Profile delta;  // Gamma(Delta(d t) t)
  double d = 1.0;
};

/// Gamma(c (t + sign * Delta(d t))). sign = -1 is the default.
struct TimeDependentPhase {
  double c = 1.0;
  Profile delta;
  double d = 1.0;
  double sign = -1.0;
};

enum class SwitchVariable { rate, phase };

/// Piecewise path: the left parameter value for t < t0, the right one for
/// t >= t0. For a rate switch the values are rates c; for a phase switch they
/// are phases s of Gamma(c (t + sign * s)), the convention of
/// TimeDependentPhase.
struct Switching {
  SwitchVariable variable = SwitchVariable::rate;
  double left = 1.0;
  double right = 1.0;
  double t0 = 0.0;
  double c = 1.0;  // fixed rate of a phase switch
  double sign = -1.0;
};

/// Gamma((Delta(t) + r tanh(b (t - t1))) t).
struct Reaction {
  Profile delta;
  double strength = 0.0;
  double sharpness = 1.0;
  double t1 = 0.0;
};

enum class MechanismKind {
  constant_rate,
  phase,
  size,
  time_dependent_rate,
  time_dependent_phase,
  switching,
  reaction,
};

inline std::string_view to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::constant_rate: return "constant-rate";
    case MechanismKind::phase: return "phase";
    case MechanismKind::size: return "size";
    case MechanismKind::time_dependent_rate: return "time-dependent-rate";
    case MechanismKind::time_dependent_phase: return "time-dependent-phase";
    case MechanismKind::switching: return "switching";
    case MechanismKind::reaction: return "reaction";
  }
  return "?";
}

class TransitionMechanism {
 public:
  using Kind = std::variant<ConstantRate, PhaseShift, SizeScale, TimeDependentRate,
                            TimeDependentPhase, Switching, Reaction>;

  TransitionMechanism() = default;
  TransitionMechanism(Profile profile, Kind kind) : profile_(profile), kind_(std::move(kind)) {
    validate();
  }

  const Profile& profile() const noexcept { return profile_; }
  const Kind& spec() const noexcept { return kind_; }
  MechanismKind kind() const noexcept { return static_cast<MechanismKind>(kind_.index()); }

  /// Effective parameter Gamma^c(t).
  double operator()(double t) const {
    return std::visit([&](const auto& k) { return eval(k, t); }, kind_);
  }

  double past_limit() const {
    return std::visit([&](const auto& k) { return limit(k, -1); }, kind_);
  }
  double future_limit() const {
    return std::visit([&](const auto& k) { return limit(k, +1); }, kind_);
  }

  bool is_continuous() const noexcept { return kind() != MechanismKind::switching; }

  /// Constant-rate or phase mechanism describing one side of a switch.
  TransitionMechanism switch_side(bool right) const {
    const auto* s = std::get_if<Switching>(&kind_);
    if (!s) throw config_error("switch_side() requires a switching mechanism");
    const double v = right ? s->right : s->left;
    if (s->variable == SwitchVariable::rate) return {profile_, ConstantRate{v}};
    return {profile_, PhaseShift{s->c, s->sign * v}};
  }

 private:
  void validate() const {
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ConstantRate>) {
            if (!(k.c > 0.0)) throw config_error("constant-rate mechanism needs c > 0");
          } else if constexpr (std::is_same_v<K, PhaseShift>) {
            if (!(k.c > 0.0)) throw config_error("phase mechanism needs c > 0");
          } else if constexpr (std::is_same_v<K, TimeDependentRate>) {
            k.delta.require_positive("rate");
            if (!(k.d > 0.0)) throw config_error("time-dependent rate needs d > 0");
          } else if constexpr (std::is_same_v<K, TimeDependentPhase>) {
            if (!(k.c > 0.0) || !(k.d > 0.0)) {
              throw config_error("time-dependent phase needs c > 0 and d > 0");
            }
            if (k.sign != 1.0 && k.sign != -1.0) {
              throw config_error("time-dependent phase sign must be +1 or -1");
            }
          } else if constexpr (std::is_same_v<K, Switching>) {
            if (k.variable == SwitchVariable::rate && (!(k.left > 0.0) || !(k.right > 0.0))) {
              throw config_error("rate switch needs positive rates");
            }
            if (k.variable == SwitchVariable::phase && !(k.c > 0.0)) {
              throw config_error("phase switch needs c > 0");
            }
            if (k.sign != 1.0 && k.sign != -1.0) throw config_error("phase switch sign must be +1 or -1");
          } else if constexpr (std::is_same_v<K, Reaction>) {
            k.delta.require_positive("rate");
            if (!(k.sharpness > 0.0)) throw config_error("reaction sharpness b must be positive");
          }
        },
        kind_);
  }

  double eval(const ConstantRate& k, double t) const { return profile_(k.c * t); }
  double eval(const PhaseShift& k, double t) const { return profile_(k.c * (t + k.offset)); }
  double eval(const SizeScale& k, double t) const { return k.c * profile_(t); }
  double eval(const TimeDependentRate& k, double t) const {
    return profile_(k.delta(k.d * t) * t);
  }
  double eval(const TimeDependentPhase& k, double t) const {
    return profile_(k.c * (t + k.sign * k.delta(k.d * t)));
  }
  double eval(const Switching& k, double t) const {
    const double v = t < k.t0 ? k.left : k.right;
    if (k.variable == SwitchVariable::rate) return profile_(v * t);
    return profile_(k.c * (t + k.sign * v));
  }
  double eval(const Reaction& k, double t) const {
    return profile_((k.delta(t) + k.strength * std::tanh(k.sharpness * (t - k.t1))) * t);
  }

  // Limit of Gamma(a(t)) where a(t) ~ slope * t as t -> side * inf.
  double argument_limit(double slope, int side) const {
    const double s = slope * side;
    if (s > 0.0) return profile_.limit_plus();
    if (s < 0.0) return profile_.limit_minus();
    return profile_(0.0);
  }

  double limit(const ConstantRate& k, int side) const { return argument_limit(k.c, side); }
  double limit(const PhaseShift& k, int side) const { return argument_limit(k.c, side); }
  double limit(const SizeScale& k, int side) const {
    return k.c * (side < 0 ? profile_.limit_minus() : profile_.limit_plus());
  }
  double limit(const TimeDependentRate& k, int side) const {
    return argument_limit(side < 0 ? k.delta.limit_minus() : k.delta.limit_plus(), side);
  }
  double limit(const TimeDependentPhase& k, int side) const { return argument_limit(k.c, side); }
  double limit(const Switching& k, int side) const {
    if (k.variable == SwitchVariable::rate) return argument_limit(side < 0 ? k.left : k.right, side);
    return argument_limit(k.c, side);
  }
  double limit(const Reaction& k, int side) const {
    const double rate = side < 0 ? k.delta.limit_minus() - k.strength
                                 : k.delta.limit_plus() + k.strength;
    return argument_limit(rate, side);
  }

  Profile profile_ = Profile::constant(0.0);
  Kind kind_ = ConstantRate{};
};

/// Fixed-phase problem Gamma(c (t + sign * s)): the frozen version of
/// TimeDependentPhase with Delta = s.
inline TransitionMechanism phase_problem(const Profile& profile, double c, double s,
                                         double sign = -1.0) {
  return {profile, PhaseShift{c, sign * s}};
}

/// Largest deviation of the path from its limits at -horizon and +horizon.
inline double limit_residual(const TransitionMechanism& m, double horizon) {
  return std::max(std::abs(m(-horizon) - m.past_limit()), std::abs(m(horizon) - m.future_limit()));
}

}  // namespace tipping

#endif  // TIPPING_TRANSITIONS_HPP
