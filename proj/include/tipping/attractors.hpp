#ifndef TIPPING_ATTRACTORS_HPP
#define TIPPING_ATTRACTORS_HPP

// Hyperbolic solutions of frozen-parameter limit equations, locally pullback
// attractive / repulsive solutions of transition equations, and Lyapunov
// exponents of hyperbolic solutions.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tipping/error.hpp"
#include "tipping/integrator.hpp"
#include "tipping/interval.hpp"
#include "tipping/models.hpp"
#include "tipping/quadrature.hpp"
#include "tipping/transitions.hpp"

namespace tipping {

struct AttractorConfig {
  IntegratorConfig integrator{};
  double burn_in = 200.0;
  int max_doublings = 6;
  double conv_tol = 1e-8;
  double sep_tol = 1e-3;
  double seed_margin = 10.0;
  double horizon = 400.0;
  double max_horizon = 6400.0;
  double limit_tol = 1e-6;  // transition path vs. its limits at +-horizon
  double anchor_delta = 1e-4;
  double anchor_tol = 1e-6;
  bool anchor_check = true;
  double band_margin = 1.0;
  double grid_step = 0.5;  // sampling step for sup / inf over windows

  void validate() const {
    integrator.validate();
    if (!(burn_in > 0.0) || max_doublings < 0) throw config_error("burn-in must be positive");
    if (!(conv_tol > 0.0) || !(sep_tol > 0.0)) throw config_error("tolerances must be positive");
    if (!(horizon > 0.0) || max_horizon < horizon) throw config_error("need 0 < horizon <= max_horizon");
    if (!(grid_step > 0.0)) throw config_error("grid step must be positive");
    if (!(anchor_delta > 0.0) || !(anchor_tol > 0.0)) throw config_error("anchor tolerances must be positive");
  }
};

enum class Role { upper_attractive, lower_attractive, middle_repulsive, attractive, repulsive };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::upper_attractive: return "upper-attractive";
    case Role::lower_attractive: return "lower-attractive";
    case Role::middle_repulsive: return "middle-repulsive";
    case Role::attractive: return "attractive";
    case Role::repulsive: return "repulsive";
  }
  return "?";
}

inline bool is_attractive(Role r) { return r != Role::middle_repulsive && r != Role::repulsive; }

struct HyperbolicEstimate {
  Role role = Role::attractive;
  double gamma = 0.0;
  Interval window{};
  Trajectory trajectory;
  double burn_in = 0.0;
  double convergence_gap = 0.0;

  double operator()(double t) const { return trajectory(t); }
};

/// Hyperbolic solutions of the frozen equation x' = f(t, x, gamma).
struct LimitStructure {
  double gamma = 0.0;
  Interval window{};
  Concavity concavity = Concavity::concave;
  std::vector<HyperbolicEstimate> estimates;  // ordered from top to bottom
  double separation = 0.0;  // inf over the window of adjacent gaps; 0 if fewer than 2
  bool complete = false;    // 2 (concave) or 3 (d-concave) separated estimates
  std::string note;

  const HyperbolicEstimate* find(Role r) const {
    for (const auto& e : estimates)
      if (e.role == r) return &e;
    return nullptr;
  }
  const HyperbolicEstimate& get(Role r) const {
    const auto* e = find(r);
    if (!e) {
      throw missing_structure_error("limit equation at gamma=" + std::to_string(gamma) +
                                    " has no " + std::string(to_string(r)) + " solution" +
                                    (note.empty() ? "" : " (" + note + ")"));
    }
    return *e;
  }
  /// Attractive estimate a pullback attractive solution starts from: the
  /// upper one for d-concave equations.
  const HyperbolicEstimate& main_attractive() const {
    return get(concavity == Concavity::d_concave ? Role::upper_attractive : Role::attractive);
  }
  const HyperbolicEstimate& main_repulsive() const {
    return get(concavity == Concavity::d_concave ? Role::middle_repulsive : Role::repulsive);
  }
};

namespace detail {

template <class F>
double domain_floor(const F& field, double t) {
  if constexpr (requires { field.domain_lower_bound(t); }) {
    return field.domain_lower_bound(t);
  } else {
    return -HUGE_VAL;
  }
}

// Lower seed clamped into the domain of the field.
template <class F>
double lower_seed(const F& field, double t, const AttractorConfig& cfg) {
  double seed = field.state_box().lo - cfg.seed_margin;
  const double floor = domain_floor(field, t);
  if (std::isfinite(floor) && seed <= floor) seed = floor + 1e-3 * (1.0 + std::abs(floor));
  return seed;
}

// Blow-up bound between a constant domain floor and the lower seed; -inf for
// floors that vary with t.
template <class F>
double floor_bound(const F& field, double t0, double t1) {
  const double f0 = domain_floor(field, t0);
  if (!std::isfinite(f0)) return -HUGE_VAL;
  for (int i = 1; i <= 64; ++i)
    if (domain_floor(field, t0 + (t1 - t0) * i / 64.0) != f0) return -HUGE_VAL;
  return f0 + 5e-4 * (1.0 + std::abs(f0));
}

inline std::vector<double> window_grid(Interval w, double step) {
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::ceil(w.width() / step));
  g.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) g.push_back(w.lo + step * static_cast<double>(i));
  g.push_back(w.hi);
  return g;
}

inline double sup_gap(const Trajectory& a, const Trajectory& b, const std::vector<double>& grid) {
  double gap = 0.0;
  for (double t : grid) gap = std::max(gap, std::abs(a(t) - b(t)));
  return gap;
}

// Value of the solution through (traj end) at time t beyond the trajectory.
template <class Rhs>
double value_at(const Trajectory& traj, Rhs& rhs, double t, const IntegratorConfig& ic) {
  if (traj.covers(t)) return traj(t);
  const bool fwd = t > traj.t_max();
  const double t0 = fwd ? traj.t_max() : traj.t_min();
  const double x0 = fwd ? traj.states().back() : traj.states().front();
  auto ext = integrate(rhs, t0, x0, t, ic);
  if (ext.blow_up()) throw missing_structure_error("solution escaped while extending a hyperbolic estimate");
  return ext.final_state();
}

}  // namespace detail

/// Burn-in estimates of the hyperbolic solutions of x' = f(t, x, gamma) on
/// `window`. Attractive ones come from forward integration started
/// `burn_in` before the window from seeds outside the state box; repulsive
/// ones from backward integration started `burn_in` after it. The burn-in is
/// doubled until two successive estimates agree to conv_tol over the window.
template <ScalarField F>
LimitStructure limit_hyperbolic_solutions(const F& field, double gamma, Interval window,
                                          const AttractorConfig& cfg = {}) {
  cfg.validate();
  if (!(window.hi > window.lo)) throw config_error("window must satisfy lo < hi");
  LimitStructure out;
  out.gamma = gamma;
  out.window = window;
  out.concavity = field.concavity();
  const auto grid = detail::window_grid(window, cfg.grid_step);
  auto rhs = [&](double t, double x) { return field.f(t, x, gamma); };
  const auto& ic = cfg.integrator;

  // Returns nullopt when the trajectory escapes (no bounded solution there).
  auto converge = [&](Role role, auto start_value, bool forward) -> std::optional<HyperbolicEstimate> {
    double B = cfg.burn_in;
    auto run = [&](double b) -> std::optional<Trajectory> {
      const double t0 = forward ? window.lo - b : window.hi + b;
      const double t1 = forward ? window.hi : window.lo;
      const double lo = detail::floor_bound(field, t0, t1);
      const auto ib = lo > ic.lower_bound ? ic.with_bounds(lo, ic.upper_bound) : ic;
      auto tr = integrate(rhs, t0, start_value(t0), t1, ib, grid);
      if (tr.blow_up()) return std::nullopt;
      return tr;
    };
    auto prev = run(B);
    if (!prev) return std::nullopt;
    for (int k = 0; k <= cfg.max_doublings; ++k) {
      auto next = run(2 * B);
      if (!next) return std::nullopt;
      const double gap = detail::sup_gap(*prev, *next, grid);
      B *= 2;
      if (gap < cfg.conv_tol) {
        return HyperbolicEstimate{role, gamma, window, std::move(*next), B, gap};
      }
      prev = std::move(next);
    }
    throw numerical_error("burn-in for the " + std::string(to_string(role)) +
                          " solution at gamma=" + std::to_string(gamma) +
                          " did not converge to " + std::to_string(cfg.conv_tol));
  };

  const double hi_seed = field.state_box().hi + cfg.seed_margin;
  auto upper = converge(field.concavity() == Concavity::d_concave ? Role::upper_attractive
                                                                  : Role::attractive,
                        [&](double) { return hi_seed; }, true);
  if (!upper) {
    out.note = "no bounded attractive solution from the upper seed";
    return out;
  }

  if (field.concavity() == Concavity::concave) {
    auto rep = converge(Role::repulsive, [&](double t) { return detail::lower_seed(field, t, cfg); },
                        false);
    out.estimates.push_back(std::move(*upper));
    if (!rep) {
      out.note = "no bounded repulsive solution below the attractor";
      return out;
    }
    double sep = HUGE_VAL;
    for (double t : grid) sep = std::min(sep, out.estimates[0](t) - (*rep)(t));
    out.estimates.push_back(std::move(*rep));
    out.separation = sep;
    out.complete = sep >= cfg.sep_tol;
    if (!out.complete) out.note = "attractor and repeller closer than sep_tol";
    return out;
  }

  auto lower = converge(Role::lower_attractive,
                        [&](double t) { return detail::lower_seed(field, t, cfg); }, true);
  if (!lower) throw numerical_error("lower attractive burn-in escaped the state space");
  double gap_ul = HUGE_VAL;
  for (double t : grid) gap_ul = std::min(gap_ul, (*upper)(t) - (*lower)(t));
  if (gap_ul < cfg.sep_tol) {
    out.estimates.push_back(std::move(*upper));
    out.separation = gap_ul;
    out.note = "attractive estimates collide: not bistable";
    return out;
  }

  // Middle repeller: backward from a seed between the attractors.
  const auto& up = *upper;
  const auto& lo = *lower;
  auto mid_seed = [&](double t) {
    return 0.5 * (detail::value_at(up.trajectory, rhs, t, ic) +
                  detail::value_at(lo.trajectory, rhs, t, ic));
  };
  auto mid = converge(Role::middle_repulsive, mid_seed, false);
  if (!mid) throw numerical_error("middle repulsive burn-in escaped the state space");
  double sep = HUGE_VAL;
  for (double t : grid) {
    sep = std::min(sep, std::min(up(t) - (*mid)(t), (*mid)(t) - lo(t)));
  }
  out.estimates.push_back(std::move(*upper));
  out.estimates.push_back(std::move(*mid));
  out.estimates.push_back(std::move(*lower));
  out.separation = sep;
  out.complete = sep >= cfg.sep_tol;
  if (!out.complete) out.note = "hyperbolic solutions closer than sep_tol";
  return out;
}

/// Smallest horizon 400 * 2^k with the path within limit_tol of its limits,
/// capped at max_horizon.
inline double choose_horizon(const TransitionMechanism& mech, const AttractorConfig& cfg,
                             bool* capped = nullptr) {
  double h = cfg.horizon;
  while (limit_residual(mech, h) > cfg.limit_tol && h < cfg.max_horizon) h = std::min(2 * h, cfg.max_horizon);
  if (capped) *capped = limit_residual(mech, h) > cfg.limit_tol;
  return h;
}

struct AnchorCheck {
  bool performed = false;
  double deviation = 0.0;
  bool pass = true;
};

struct PullbackSolution {
  Role role = Role::attractive;  // attractive-from-past or repulsive-from-future
  Trajectory trajectory;
  double horizon = 0.0;
  double anchor_value = 0.0;
  bool band_exit = false;  // repulsive d-concave solution left the state band
  AnchorCheck anchor;

  bool bounded() const { return trajectory.completed(); }
  const std::optional<BlowUp>& blow_up() const { return trajectory.blow_up(); }
  double operator()(double t) const { return trajectory(t); }
};

namespace detail {

template <class Rhs>
AnchorCheck anchor_sensitivity(Rhs& rhs, double t0, double x0, double t_check, const Trajectory& base,
                               const AttractorConfig& cfg, const IntegratorConfig& ic) {
  AnchorCheck chk;
  if (!cfg.anchor_check || !base.covers(t_check)) return chk;
  const double ref = base(t_check);
  for (double s : {-1.0, 1.0}) {
    auto tr = integrate(rhs, t0, x0 + s * cfg.anchor_delta, t_check, ic);
    if (tr.blow_up()) {
      chk.performed = true;
      chk.deviation = HUGE_VAL;
      chk.pass = false;
      return chk;
    }
    chk.deviation = std::max(chk.deviation, std::abs(tr.final_state() - ref));
  }
  chk.performed = true;
  chk.pass = chk.deviation < cfg.anchor_tol;
  return chk;
}

}  // namespace detail

/// Forward solution from (-T_h, anchor(-T_h)) for an arbitrary right-hand side.
template <class Rhs>
PullbackSolution pullback_attractive_rhs(Rhs rhs, const HyperbolicEstimate& anchor, double horizon,
                                         double t_end, const AttractorConfig& cfg = {}) {
  if (!is_attractive(anchor.role)) throw config_error("pullback_attractive needs an attractive anchor");
  PullbackSolution out;
  out.role = anchor.role;
  out.horizon = horizon;
  out.anchor_value = anchor(-horizon);
  out.trajectory = integrate(rhs, -horizon, out.anchor_value, t_end, cfg.integrator);
  out.anchor = detail::anchor_sensitivity(rhs, -horizon, out.anchor_value, -horizon / 2,
                                          out.trajectory, cfg, cfg.integrator);
  return out;
}

template <ScalarField F>
PullbackSolution pullback_attractive(const F& field, const TransitionMechanism& mech,
                                     const HyperbolicEstimate& anchor, double horizon,
                                     const AttractorConfig& cfg = {}) {
  auto rhs = [&](double t, double x) { return field.f(t, x, mech(t)); };
  return pullback_attractive_rhs(rhs, anchor, horizon, horizon, cfg);
}

/// Backward solution from (T_h, anchor(T_h)). For d-concave fields the
/// integration stops when the solution leaves the band around the state box.
template <ScalarField F>
PullbackSolution pullback_repulsive(const F& field, const TransitionMechanism& mech,
                                    const HyperbolicEstimate& anchor, double horizon,
                                    const AttractorConfig& cfg = {}, double t_end = HUGE_VAL) {
  if (is_attractive(anchor.role)) throw config_error("pullback_repulsive needs a repulsive anchor");
  if (!std::isfinite(t_end)) t_end = -horizon;
  auto rhs = [&](double t, double x) { return field.f(t, x, mech(t)); };
  IntegratorConfig ic = cfg.integrator;
  if (field.concavity() == Concavity::d_concave) {
    const Interval box = field.state_box();
    ic = ic.with_bounds(box.lo - cfg.band_margin, box.hi + cfg.band_margin);
  }
  PullbackSolution out;
  out.role = anchor.role;
  out.horizon = horizon;
  out.anchor_value = anchor(horizon);
  out.trajectory = integrate(rhs, horizon, out.anchor_value, t_end, ic);
  out.band_exit = out.trajectory.blow_up().has_value() && field.concavity() == Concavity::d_concave;
  out.anchor = detail::anchor_sensitivity(rhs, horizon, out.anchor_value, horizon / 2,
                                          out.trajectory, cfg, ic);
  return out;
}

struct LyapunovEstimate {
  double exponent = 0.0;
  double window = 0.0;
  double doubled_exponent = std::nan("");  // over twice the window, when available
  double sensitivity = std::nan("");
};

/// (1/T_L) int f_x(s, x(s), gamma) ds over the last T_L units of the
/// estimate's trajectory; the doubled window is used for the sensitivity
/// report when the trajectory is long enough.
template <ScalarField F>
LyapunovEstimate estimate_lyapunov(const F& field, double gamma, const HyperbolicEstimate& sol,
                                   double T_L) {
  if (!(T_L > 0.0)) throw config_error("averaging window must be positive");
  const auto& tr = sol.trajectory;
  const double end = sol.window.hi;
  if (end - T_L < tr.t_min()) throw config_error("averaging window exceeds the solution span");
  auto g = [&field, gamma](double s, double x) { return field.fx(s, x, gamma); };
  CumulativeIntegral<decltype(g)> C(tr, g);
  LyapunovEstimate out;
  out.window = T_L;
  out.exponent = C.integral(end - T_L, end) / T_L;
  if (end - 2 * T_L >= tr.t_min()) {
    out.doubled_exponent = C.integral(end - 2 * T_L, end) / (2 * T_L);
    out.sensitivity = std::abs(out.doubled_exponent - out.exponent);
  }
  return out;
}

/// Computes the hyperbolic solution of the given role on [-T_L, T_L] and
/// its exponent over [0, T_L] with the doubled window [-T_L, T_L].
template <ScalarField F>
LyapunovEstimate lyapunov_of(const F& field, double gamma, Role role, double T_L,
                             const AttractorConfig& cfg = {}) {
  auto ls = limit_hyperbolic_solutions(field, gamma, Interval{-T_L, T_L}, cfg);
  return estimate_lyapunov(field, gamma, ls.get(role), T_L);
}

}  // namespace tipping

#endif  // TIPPING_ATTRACTORS_HPP
