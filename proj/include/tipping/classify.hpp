#ifndef TIPPING_CLASSIFY_HPP
#define TIPPING_CLASSIFY_HPP

// Case classification of transition equations and bisection solvers for
// critical rates, the additive-shift bifurcation map and the gamma-interval
// of bistability.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tipping/attractors.hpp"
#include "tipping/error.hpp"
#include "tipping/models.hpp"
#include "tipping/transitions.hpp"

namespace tipping {

enum class Case { A, C, C1, C2, B, B1, B2, indeterminate };

inline std::string_view to_string(Case c) {
  switch (c) {
    case Case::A: return "A";
    case Case::C: return "C";
    case Case::C1: return "C1";
    case Case::C2: return "C2";
    case Case::B: return "B";
    case Case::B1: return "B1";
    case Case::B2: return "B2";
    case Case::indeterminate: return "indeterminate";
  }
  return "?";
}

struct ClassifyConfig {
  AttractorConfig attractors{};
  double track_fraction = 1e-3;  // track_tol = fraction * attractor separation at +T_h
  bool double_horizon_once = true;
};

/// Numerical evidence behind a label.
struct CaseLabel {
  Case label = Case::indeterminate;
  Concavity concavity = Concavity::concave;
  double horizon = 0.0;
  bool horizon_capped = false;  // path not within limit_tol of its limits at +-T_h
  double track_tol = 0.0;
  double sep_tol = 0.0;
  // Terminal values at +T_h: pullback solutions and future estimates.
  double upper_terminal = std::nan("");  // u_c (d-concave) or a_c (concave)
  double lower_terminal = std::nan("");  // l_c
  double future_upper = std::nan("");    // u~ / a~ at gamma_+
  double future_middle = std::nan("");   // m~ / r~ at gamma_+
  double future_lower = std::nan("");    // l~
  double upper_distance = std::nan("");  // distance of u_c / a_c to the attractor it tracks
  double lower_distance = std::nan("");
  bool repulsive_bounded = true;  // m_c / r_c stayed bounded over [-T_h, T_h]
  std::optional<double> repulsive_exit_time;
  std::optional<BlowUp> attractive_blow_up;
  std::optional<BlowUp> repulsive_blow_up;
  bool anchors_insensitive = true;
  double anchor_deviation = 0.0;
  std::string note;

  bool determinate() const { return label != Case::indeterminate; }
};

struct CriticalValueResult {
  double lo = 0.0;
  double hi = 0.0;
  std::string label_lo;
  std::string label_hi;
  int iterations = 0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// x' = f(t, x, gamma) + lambda for any field.
template <ScalarField F>
class AdditiveShift {
 public:
  AdditiveShift(const F& base, double lambda) : base_(&base), lambda_(lambda) {}
  double f(double t, double x, double g) const { return base_->f(t, x, g) + lambda_; }
  double fx(double t, double x, double g) const { return base_->fx(t, x, g); }
  double fxx(double t, double x, double g) const { return base_->fxx(t, x, g); }
  Concavity concavity() const { return base_->concavity(); }
  Interval state_box() const { return base_->state_box(); }
  double domain_lower_bound(double t) const { return detail::domain_floor(*base_, t); }
  double lambda() const { return lambda_; }

 private:
  const F* base_;
  double lambda_;
};

/// The size mechanism c Gamma(t) is defined only for models of the form
/// h(t, x - gamma).
inline void require_compatible(const VectorFieldModel& model, const TransitionMechanism& mech) {
  if (mech.kind() == MechanismKind::size && !model.is_translation_family()) {
    throw config_error("the size mechanism needs a model of the form h(t, x - gamma); " +
                       std::string(to_string(model.family())) + " is not");
  }
}

namespace detail {

inline void merge_anchor(CaseLabel& out, const PullbackSolution& p) {
  if (p.anchor.performed) {
    out.anchor_deviation = std::max(out.anchor_deviation, p.anchor.deviation);
    out.anchors_insensitive = out.anchors_insensitive && p.anchor.pass;
  }
}

template <ScalarField F>
CaseLabel classify_at(const F& field, const TransitionMechanism& mech, double Th,
                      const ClassifyConfig& cfg) {
  const auto& ac = cfg.attractors;
  CaseLabel out;
  out.concavity = field.concavity();
  out.horizon = Th;
  out.sep_tol = ac.sep_tol;

  const auto past = limit_hyperbolic_solutions(field, mech.past_limit(), Interval{-Th, -Th + 1.0}, ac);
  const auto future = limit_hyperbolic_solutions(field, mech.future_limit(), Interval{Th - 1.0, Th}, ac);
  if (!past.complete) {
    throw missing_structure_error("past limit equation lacks the hyperbolic structure: " + past.note);
  }
  if (!future.complete) {
    throw missing_structure_error("future limit equation lacks the hyperbolic structure: " +
                                  future.note);
  }

  if (field.concavity() == Concavity::d_concave) {
    const auto u = pullback_attractive(field, mech, past.get(Role::upper_attractive), Th, ac);
    const auto l = pullback_attractive(field, mech, past.get(Role::lower_attractive), Th, ac);
    const auto m = pullback_repulsive(field, mech, future.get(Role::middle_repulsive), Th, ac);
    merge_anchor(out, u);
    merge_anchor(out, l);
    merge_anchor(out, m);
    const double U = future.get(Role::upper_attractive)(Th);
    const double M = future.get(Role::middle_repulsive)(Th);
    const double L = future.get(Role::lower_attractive)(Th);
    out.future_upper = U;
    out.future_middle = M;
    out.future_lower = L;
    out.track_tol = cfg.track_fraction * (U - L);
    out.repulsive_bounded = m.trajectory.completed();
    if (m.blow_up()) {
      out.repulsive_blow_up = m.blow_up();
      out.repulsive_exit_time = m.blow_up()->time;
    }
    if (!u.trajectory.completed() || !l.trajectory.completed()) {
      out.note = "an attractive pullback solution left the state space";
      return out;
    }
    const double uT = u.trajectory.final_state();
    const double lT = l.trajectory.final_state();
    out.upper_terminal = uT;
    out.lower_terminal = lT;
    const bool u_up = uT > M + ac.sep_tol, u_down = uT < M - ac.sep_tol;
    const bool l_up = lT > M + ac.sep_tol, l_down = lT < M - ac.sep_tol;
    if (u_down) {
      out.upper_distance = std::abs(uT - L);
      out.lower_distance = std::abs(lT - L);
      if (out.upper_distance < out.track_tol) out.label = Case::C2;
      else out.note = "u_c below the future repeller but not yet near the lower attractor";
      return out;
    }
    if (l_up) {
      out.upper_distance = std::abs(uT - U);
      out.lower_distance = std::abs(lT - U);
      if (out.lower_distance < out.track_tol) out.label = Case::C1;
      else out.note = "l_c above the future repeller but not yet near the upper attractor";
      return out;
    }
    if (u_up && l_down) {
      out.upper_distance = std::abs(uT - U);
      out.lower_distance = std::abs(lT - L);
      if (out.upper_distance < out.track_tol && out.lower_distance < out.track_tol &&
          out.repulsive_bounded) {
        out.label = Case::A;
      } else if (!out.repulsive_bounded) {
        out.note = "attractive solutions track but m_c left the band";
      } else {
        out.note = "tracking distances above track_tol";
      }
      return out;
    }
    out.note = "a terminal value lies within sep_tol of the future repeller";
    return out;
  }

  // Concave.
  const auto a = pullback_attractive(field, mech, past.get(Role::attractive), Th, ac);
  const auto r = pullback_repulsive(field, mech, future.get(Role::repulsive), Th, ac);
  merge_anchor(out, a);
  merge_anchor(out, r);
  const double A = future.get(Role::attractive)(Th);
  const double R = future.get(Role::repulsive)(Th);
  out.future_upper = A;
  out.future_middle = R;
  out.track_tol = cfg.track_fraction * (A - R);
  out.attractive_blow_up = a.blow_up();
  out.repulsive_blow_up = r.blow_up();
  out.repulsive_bounded = r.trajectory.completed();
  if (r.blow_up()) out.repulsive_exit_time = r.blow_up()->time;
  if (a.blow_up() || r.blow_up()) {
    out.label = Case::C;
    return out;
  }
  const double aT = a.trajectory.final_state();
  out.upper_terminal = aT;
  out.upper_distance = std::abs(aT - A);
  if (aT > R + ac.sep_tol && out.upper_distance < out.track_tol) {
    out.label = Case::A;
  } else {
    out.note = "a_c bounded but not tracking the future attractor";
  }
  return out;
}

}  // namespace detail

/// Classifies x' = f(t, x, mech(t)). The horizon is the smallest 400 * 2^k
/// for which the path is within limit_tol of its limits (capped); an
/// indeterminate result is retried once with twice the horizon.
template <ScalarField F>
CaseLabel classify(const F& field, const TransitionMechanism& mech, const ClassifyConfig& cfg = {}) {
  cfg.attractors.validate();
  bool capped = false;
  const double Th = choose_horizon(mech, cfg.attractors, &capped);
  CaseLabel out = detail::classify_at(field, mech, Th, cfg);
  out.horizon_capped = capped;
  if (!out.determinate() && cfg.double_horizon_once) {
    out = detail::classify_at(field, mech, 2 * Th, cfg);
    out.horizon_capped = limit_residual(mech, 2 * Th) > cfg.attractors.limit_tol;
  }
  return out;
}

/// Bisection on c for a family c -> mechanism. Labels at the ends must
/// differ; every midpoint must reproduce one of them.
template <ScalarField F, class Family>
CriticalValueResult critical_value(const F& field, Family&& family, double c_lo, double c_hi,
                                   double tol, const ClassifyConfig& cfg = {}) {
  if (!(c_lo < c_hi) || !(tol > 0.0)) throw config_error("critical_value needs c_lo < c_hi and tol > 0");
  auto label_of = [&](double c) {
    const auto lab = classify(field, family(c), cfg);
    if (!lab.determinate()) {
      throw indeterminate_error("classification indeterminate at c=" + std::to_string(c) + ": " + lab.note,
                                c);
    }
    return lab.label;
  };
  const Case at_lo = label_of(c_lo);
  const Case at_hi = label_of(c_hi);
  if (at_lo == at_hi) {
    throw config_error("bracket ends share the label " + std::string(to_string(at_lo)));
  }
  CriticalValueResult res{c_lo, c_hi, std::string(to_string(at_lo)), std::string(to_string(at_hi)), 0};
  while (res.hi - res.lo > tol) {
    const double mid = 0.5 * (res.lo + res.hi);
    const Case lab = label_of(mid);
    if (lab == at_lo) res.lo = mid;
    else if (lab == at_hi) res.hi = mid;
    else {
      throw indeterminate_error("third label " + std::string(to_string(lab)) + " inside the bracket at c=" +
                                    std::to_string(mid),
                                mid);
    }
    ++res.iterations;
  }
  return res;
}

struct LambdaStarResult {
  double value = 0.0;  // bracket midpoint
  double lo = 0.0;     // Case C side
  double hi = 0.0;     // Case A side
  int iterations = 0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Critical additive shift of a concave transition equation: the shifted
/// equation x' = f + lambda is in Case A for lambda > lambda* and in Case C
/// below. A missing limit structure counts as Case C.
template <ScalarField F>
LambdaStarResult lambda_star(const F& field, const TransitionMechanism& mech, double tol,
                             std::pair<double, double> bracket = {-0.5, 0.5},
                             const ClassifyConfig& cfg = {}, int max_expansions = 12) {
  if (field.concavity() != Concavity::concave) throw config_error("lambda_star needs a concave model");
  if (!(tol > 0.0) || !(bracket.first < bracket.second)) throw config_error("lambda_star needs tol > 0 and lo < hi");
  auto tracks = [&](double lambda) -> std::optional<bool> {
    const AdditiveShift<F> shifted(field, lambda);
    try {
      const auto lab = classify(shifted, mech, cfg);
      if (lab.label == Case::A) return true;
      if (lab.label == Case::C) return false;
      return std::nullopt;
    } catch (const missing_structure_error&) {
      return false;
    }
  };
  double lo = bracket.first, hi = bracket.second;
  int expansions = 0;
  while (true) {
    auto t = tracks(hi);
    if (t && *t) break;
    if (++expansions > max_expansions) throw numerical_error("lambda_star: bracket expansion cap reached (top)");
    const double w = hi - lo;
    lo = hi;
    hi += 2 * w;
  }
  while (true) {
    auto t = tracks(lo);
    if (t && !*t) break;
    if (++expansions > max_expansions) throw numerical_error("lambda_star: bracket expansion cap reached (bottom)");
    const double w = hi - lo;
    hi = lo;
    lo -= 2 * w;
  }
  LambdaStarResult res{0.0, lo, hi, 0};
  while (res.hi - res.lo > tol) {
    const double mid = 0.5 * (res.lo + res.hi);
    const auto t = tracks(mid);
    if (!t) throw indeterminate_error("lambda_star: indeterminate classification at lambda=" + std::to_string(mid), mid);
    (*t ? res.hi : res.lo) = mid;
    ++res.iterations;
  }
  res.value = res.mid();
  return res;
}

struct GammaIntervalResult {
  CriticalValueResult gamma1;  // lo: monostable, hi: bistable
  CriticalValueResult gamma2;  // lo: bistable, hi: monostable
};

/// Ends of the set of frozen gamma with the full hyperbolic structure
/// (three separated solutions), by a scan followed by bisection.
template <ScalarField F>
GammaIntervalResult gamma_interval(const F& field, double g_lo, double g_hi, std::size_t scan_points,
                                   double tol, double window = 100.0, const AttractorConfig& cfg = {}) {
  if (!(g_lo < g_hi) || scan_points < 3 || !(tol > 0.0)) throw config_error("gamma_interval needs g_lo < g_hi, >= 3 scan points, tol > 0");
  auto bistable = [&](double g) {
    try {
      return limit_hyperbolic_solutions(field, g, Interval{-window, window}, cfg).complete;
    } catch (const numerical_error& e) {
      throw indeterminate_error(std::string("gamma_interval: ") + e.what(), g);
    }
  };
  std::vector<double> gs(scan_points);
  std::vector<char> in(scan_points);
  for (std::size_t i = 0; i < scan_points; ++i) {
    gs[i] = g_lo + (g_hi - g_lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    in[i] = bistable(gs[i]);
  }
  std::size_t first = scan_points, last = scan_points;
  for (std::size_t i = 0; i < scan_points; ++i) {
    if (in[i]) {
      if (first == scan_points) first = i;
      last = i;
    }
  }
  if (first == scan_points) throw numerical_error("gamma_interval: no bistable gamma in the scanned range");
  if (first == 0 || last == scan_points - 1) {
    throw numerical_error("gamma_interval: the bistable set reaches the end of the scanned range");
  }
  auto bisect = [&](double a, double b, bool a_in) {
    CriticalValueResult r{a, b, a_in ? "bistable" : "monostable", a_in ? "monostable" : "bistable", 0};
    while (r.hi - r.lo > tol) {
      const double mid = r.mid();
      (bistable(mid) == a_in ? r.lo : r.hi) = mid;
      ++r.iterations;
    }
    return r;
  };
  return {bisect(gs[first - 1], gs[first], false), bisect(gs[last], gs[last + 1], true)};
}

struct SwitchingResult {
  Case label = Case::B;
  double attractive_value = std::nan("");  // a_{left}(t0)
  double repulsive_value = std::nan("");   // r_{right}(t0)
  std::optional<BlowUp> attractive_blow_up;
  std::optional<BlowUp> repulsive_blow_up;
  double horizon = 0.0;
};

/// Switch at t0 from the left path to the right one: Case A iff the left
/// pullback attractive solution lies above the right pullback repulsive
/// solution at t0 (by more than sep_tol), Case C if below, boundary B
/// otherwise.
template <ScalarField F>
SwitchingResult switching_classify(const F& field, const TransitionMechanism& left,
                                   const TransitionMechanism& right, double t0,
                                   const ClassifyConfig& cfg = {}) {
  const auto& ac = cfg.attractors;
  const double Th = std::max({choose_horizon(left, ac), choose_horizon(right, ac), std::abs(t0) + ac.horizon});
  const auto past = limit_hyperbolic_solutions(field, left.past_limit(), Interval{-Th, -Th + 1.0}, ac);
  const auto future = limit_hyperbolic_solutions(field, right.future_limit(), Interval{Th - 1.0, Th}, ac);
  SwitchingResult out;
  out.horizon = Th;
  auto rhs_left = [&](double t, double x) { return field.f(t, x, left(t)); };
  auto a = pullback_attractive_rhs(rhs_left, past.main_attractive(), Th, t0, ac);
  const auto r = pullback_repulsive(field, right, future.main_repulsive(), Th, ac, t0);
  out.attractive_blow_up = a.blow_up();
  out.repulsive_blow_up = r.blow_up();
  if (a.blow_up() || r.blow_up()) {
    out.label = Case::C;
    return out;
  }
  out.attractive_value = a.trajectory.final_state();
  out.repulsive_value = r.trajectory.final_state();
  if (out.attractive_value > out.repulsive_value + ac.sep_tol) out.label = Case::A;
  else if (out.attractive_value < out.repulsive_value - ac.sep_tol) out.label = Case::C;
  else out.label = Case::B;
  return out;
}

template <ScalarField F>
SwitchingResult switching_classify(const F& field, const TransitionMechanism& switching,
                                   const ClassifyConfig& cfg = {}) {
  const auto* s = std::get_if<Switching>(&switching.spec());
  if (!s) throw config_error("switching_classify needs a switching mechanism");
  return switching_classify(field, switching.switch_side(false), switching.switch_side(true), s->t0, cfg);
}

}  // namespace tipping

#endif  // TIPPING_CLASSIFY_HPP
