#ifndef TIPPING_EWS_HPP
#define TIPPING_EWS_HPP

// Finite-time Lyapunov exponents along pullback solutions, early-warning
// detection, detection regions, safe / no-return points and the reaction
// experiment.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tipping/attractors.hpp"
#include "tipping/classify.hpp"
#include "tipping/parallel.hpp"
#include "tipping/quadrature.hpp"

namespace tipping {

inline std::vector<double> uniform_grid(double a, double b, double step) {
  if (!(b >= a) || !(step > 0.0)) throw config_error("grid needs a <= b and step > 0");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
  g.reserve(n + 2);
  for (std::size_t i = 0; i <= n; ++i) g.push_back(a + step * static_cast<double>(i));
  if (b - g.back() > 1e-9 * std::max(1.0, std::abs(b))) g.push_back(b);
  return g;
}

struct FtleSeries {
  double window = 0.0;  // T
  std::vector<double> t;
  std::vector<double> lambda;
  std::string role;

  double max() const { return lambda.empty() ? -HUGE_VAL : *std::max_element(lambda.begin(), lambda.end()); }
  void write_csv(std::ostream& os) const {
    const auto old = os.precision(17);
    os << "t,lambda\n";
    for (std::size_t i = 0; i < t.size(); ++i) os << t[i] << ',' << lambda[i] << '\n';
    os.precision(old);
  }
};

/// lambda(t) = (1/T) int_{t-T}^{t} g(s, x(s)) ds on `grid`.
template <class G>
FtleSeries ftle_series_along(const Trajectory& traj, G g, double T, const std::vector<double>& grid,
                             std::string role = {}) {
  if (!(T > 0.0)) throw config_error("FTLE window must be positive");
  if (grid.empty()) throw config_error("FTLE grid is empty");
  const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
  if (*lo - T < traj.t_min() || *hi > traj.t_max()) {
    throw config_error("FTLE grid [" + std::to_string(*lo) + ", " + std::to_string(*hi) + "] with T=" +
                       std::to_string(T) + " is not covered by the solution span [" +
                       std::to_string(traj.t_min()) + ", " + std::to_string(traj.t_max()) + "]");
  }
  CumulativeIntegral<G> C(traj, std::move(g));
  FtleSeries out;
  out.window = T;
  out.role = std::move(role);
  out.t = grid;
  out.lambda.reserve(grid.size());
  for (double t : grid) out.lambda.push_back(C.integral(t - T, t) / T);
  return out;
}

template <ScalarField F>
FtleSeries ftle_series(const F& field, const TransitionMechanism& mech, const PullbackSolution& sol,
                       double T, const std::vector<double>& grid) {
  auto g = [&field, &mech](double s, double x) { return field.fx(s, x, mech(s)); };
  return ftle_series_along(sol.trajectory, g, T, grid, std::string(to_string(sol.role)));
}

struct EwsConfig {
  double kappa = 0.5;
  double L = -1.0;  // reference exponent of the past attractor
  double t_min = -400.0;
  double t_max = 400.0;

  void validate() const {
    if (!(kappa >= 0.0 && kappa < 1.0)) throw config_error("kappa must lie in [0, 1)");
    if (!(L < 0.0)) throw config_error("reference exponent L must be negative");
    if (!(t_min < t_max)) throw config_error("EWS search window must satisfy t_min < t_max");
  }
  double threshold() const { return kappa * L; }
};

/// First time in the search window with lambda >= kappa L. Between grid nodes
/// the crossing is refined by bisection on the linear interpolant to 1e-3.
inline std::optional<double> warning_time(const FtleSeries& series, const EwsConfig& ews) {
  ews.validate();
  const double thr = ews.threshold();
  bool have_prev = false;
  double tp = 0.0, vp = 0.0;
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    const double t = series.t[i], v = series.lambda[i];
    if (t < ews.t_min || t > ews.t_max) continue;
    if (v >= thr) {
      if (!have_prev) return t;
      double a = tp, b = t;
      auto interp = [&](double s) { return vp + (v - vp) * (s - tp) / (t - tp); };
      while (b - a > 1e-3) {
        const double m = 0.5 * (a + b);
        (interp(m) >= thr ? b : a) = m;
      }
      return b;
    }
    have_prev = true;
    tp = t;
    vp = v;
  }
  return std::nullopt;
}

/// Grid of experiment outcomes; cell (i, j) pairs axis1[i] with axis2[j].
struct RegionGrid {
  std::string axis1_name, axis2_name;
  std::vector<double> axis1, axis2;
  std::vector<std::string> outcomes;  // row-major in axis1
  std::vector<std::string> notes;

  RegionGrid() = default;
  RegionGrid(std::string n1, std::vector<double> a1, std::string n2, std::vector<double> a2)
      : axis1_name(std::move(n1)), axis2_name(std::move(n2)), axis1(std::move(a1)), axis2(std::move(a2)) {
    if (axis1.empty() || axis2.empty()) throw config_error("region grids must be nonempty");
    outcomes.assign(axis1.size() * axis2.size(), "");
    notes.assign(outcomes.size(), "");
  }
  std::string& at(std::size_t i, std::size_t j) { return outcomes[i * axis2.size() + j]; }
  const std::string& at(std::size_t i, std::size_t j) const { return outcomes[i * axis2.size() + j]; }
  std::string& note(std::size_t i, std::size_t j) { return notes[i * axis2.size() + j]; }

  void write_csv(std::ostream& os) const {
    const auto old = os.precision(17);
    os << "axis1,axis2,outcome\n";
    for (std::size_t i = 0; i < axis1.size(); ++i)
      for (std::size_t j = 0; j < axis2.size(); ++j) os << axis1[i] << ',' << axis2[j] << ',' << at(i, j) << '\n';
    os.precision(old);
  }
};

struct EwsRegionConfig {
  ClassifyConfig classify{};
  double grid_step = 0.1;
  unsigned threads = 1;
};

/// Upper (d-concave) or main (concave) pullback attractive solution of
/// x' = f(t, x, mech(t)), computed on a horizon long enough for an FTLE
/// window T over [t_min, t_max].
template <ScalarField F>
PullbackSolution upper_pullback(const F& field, const TransitionMechanism& mech, double T, double t_min,
                                double t_max, const AttractorConfig& ac,
                                const std::vector<double>& stops = {}) {
  double Th = choose_horizon(mech, ac);
  while (Th < std::max(-(t_min - T), t_max)) Th *= 2;
  const auto past = limit_hyperbolic_solutions(field, mech.past_limit(), Interval{-Th, -Th + 1.0}, ac);
  auto rhs = [&](double t, double x) { return field.f(t, x, mech(t)); };
  PullbackSolution out;
  const auto& anchor = past.main_attractive();
  out.role = anchor.role;
  out.horizon = Th;
  out.anchor_value = anchor(-Th);
  out.trajectory = integrate(rhs, -Th, out.anchor_value, Th, ac.integrator, stops);
  out.anchor = detail::anchor_sensitivity(rhs, -Th, out.anchor_value, -Th / 2, out.trajectory, ac, ac.integrator);
  return out;
}

/// Cell (kappa_i, c_j) is "detected" iff lambda_u(c_j, T, t) >= kappa_i L
/// for some t in [t_min, t_max]. One FTLE series per rate serves every kappa.
template <ScalarField F, class Family>
RegionGrid ews_region(const F& field, Family&& family, const std::vector<double>& kappas,
                      const std::vector<double>& rates, double T, double L, double t_min, double t_max,
                      const EwsRegionConfig& cfg = {}) {
  RegionGrid grid("kappa", kappas, "c", rates);
  const auto tgrid = uniform_grid(t_min, t_max, cfg.grid_step);
  parallel_for(rates.size(), cfg.threads, [&](std::size_t j) {
    try {
      const TransitionMechanism mech = family(rates[j]);
      const auto u = upper_pullback(field, mech, T, t_min, t_max, cfg.classify.attractors);
      if (!u.trajectory.completed()) throw numerical_error("u_c left the state space");
      const auto series = ftle_series(field, mech, u, T, tgrid);
      const double mx = series.max();
      for (std::size_t i = 0; i < kappas.size(); ++i) {
        const EwsConfig ews{kappas[i], L, t_min, t_max};
        ews.validate();
        grid.at(i, j) = mx >= ews.threshold() ? "detected" : "none";
      }
    } catch (const std::exception& e) {
      for (std::size_t i = 0; i < kappas.size(); ++i) {
        grid.at(i, j) = "error";
        grid.note(i, j) = e.what();
      }
    }
  });
  return grid;
}

/// Pullback repulsive solutions of constant-rate problems, keyed by the rate
/// rounded to 4 decimals. Insert-if-absent under a mutex; entries are
/// immutable once stored.
class RepellerCache {
 public:
  explicit RepellerCache(bool enabled = true) : enabled_(enabled) {}
  bool enabled() const noexcept { return enabled_; }

  static long long key(double c) { return std::llround(c * 1e4); }
  double snap(double c) const { return enabled_ ? static_cast<double>(key(c)) / 1e4 : c; }

  template <class Make>
  std::shared_ptr<const PullbackSolution> get(double c, Make&& make) {
    if (!enabled_) return std::make_shared<const PullbackSolution>(make(c));
    const long long k = key(c);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(k);
      if (it != map_.end()) return it->second;
    }
    auto sol = std::make_shared<const PullbackSolution>(make(snap(c)));
    std::lock_guard<std::mutex> lock(mu_);
    return map_.emplace(k, std::move(sol)).first->second;
  }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  bool enabled_;
  mutable std::mutex mu_;
  std::map<long long, std::shared_ptr<const PullbackSolution>> map_;
};

namespace detail {

// Pullback repulsive solution of the constant-rate problem at rate c,
// integrated backward down to t_end with stops on `stops`.
template <ScalarField F>
PullbackSolution frozen_repeller(const F& field, const Profile& gamma, double c, double t_end,
                                 const std::vector<double>& stops, const AttractorConfig& ac) {
  const TransitionMechanism mech(gamma, ConstantRate{c});
  double Th = choose_horizon(mech, ac);
  while (Th < std::abs(t_end) + 1.0) Th *= 2;
  const auto future = limit_hyperbolic_solutions(field, mech.future_limit(), Interval{Th - 1.0, Th}, ac);
  const auto& anchor = future.main_repulsive();
  auto rhs = [&](double t, double x) { return field.f(t, x, mech(t)); };
  IntegratorConfig ic = ac.integrator;
  if (field.concavity() == Concavity::d_concave) {
    const Interval box = field.state_box();
    ic = ic.with_bounds(box.lo - ac.band_margin, box.hi + ac.band_margin);
  }
  PullbackSolution out;
  out.role = anchor.role;
  out.horizon = Th;
  out.anchor_value = anchor(Th);
  out.trajectory = integrate(rhs, Th, out.anchor_value, t_end, ic, stops);
  out.band_exit = out.trajectory.blow_up().has_value();
  return out;
}

inline double value_or_nan(const PullbackSolution& s, double t) {
  return s.trajectory.covers(t) ? s.trajectory(t) : std::nan("");
}

}  // namespace detail

/// t -> m_{Delta(d t)}(t): for each grid time the repulsive pullback solution
/// of the constant-rate problem frozen at c = Delta(d t), evaluated at t.
/// NaN where that solution has already left the band.
template <ScalarField F>
std::vector<double> m_curve(const F& field, const Profile& gamma, const Profile& delta, double d,
                            const std::vector<double>& grid, const AttractorConfig& ac = {},
                            RepellerCache* cache = nullptr) {
  RepellerCache local(cache ? cache->enabled() : true);
  RepellerCache& rc = cache ? *cache : local;
  const double t_end = *std::min_element(grid.begin(), grid.end());
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    const double c = delta(d * t);
    auto sol = rc.get(c, [&](double cc) { return detail::frozen_repeller(field, gamma, cc, t_end, grid, ac); });
    out.push_back(detail::value_or_nan(*sol, t));
  }
  return out;
}

struct SafePointRow {
  double t = 0.0;
  double u_delta = 0.0;
  double m_frozen = 0.0;
  double m_future = 0.0;
  std::string flag;  // safe | no-return | neither
};

struct SafePointReport {
  bool no_tipping_possible = false;
  std::optional<double> s1;  // warning point
  double c0 = 0.0, c_star = 0.0, t0 = 0.0;
  std::vector<double> safe, no_return;
  std::vector<SafePointRow> rows;
  std::string conclusion;  // tracking | tipping | undetermined | no tipping possible

  void write_csv(std::ostream& os) const {
    const auto old = os.precision(17);
    os << "t,u_delta,m_frozen,m_future,flag\n";
    for (const auto& r : rows) os << r.t << ',' << r.u_delta << ',' << r.m_frozen << ',' << r.m_future << ',' << r.flag << '\n';
    os.precision(old);
  }
};

/// First t in [-scan, scan] with Delta(d t) = c0, by scanning with step
/// `step` and bisecting the first sign change.
inline std::optional<double> first_crossing(const Profile& delta, double d, double c0, double scan = 1000.0,
                                            double step = 1e-2) {
  auto g = [&](double t) { return delta(d * t) - c0; };
  double tp = -scan, gp = g(tp);
  if (gp == 0.0) return tp;
  const auto n = static_cast<std::size_t>(std::ceil(2 * scan / step));
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = -scan + step * static_cast<double>(i);
    const double gv = g(t);
    if (gv == 0.0) return t;
    if ((gv < 0.0) != (gp < 0.0)) {
      double a = tp, b = t;
      for (int k = 0; k < 200 && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++k) {
        const double m = 0.5 * (a + b);
        ((g(m) < 0.0) == (gp < 0.0) ? a : b) = m;
      }
      return 0.5 * (a + b);
    }
    tp = t;
    gp = gv;
  }
  return std::nullopt;
}

/// Warning, safe and no-return points of x' = f(t, x, Gamma(Delta(d t) t)).
template <ScalarField F>
SafePointReport safe_no_return(const F& field, const Profile& gamma, const Profile& delta, double d, double c0,
                               double c_star, double t0, const std::vector<double>& grid,
                               const AttractorConfig& ac = {}, RepellerCache* cache = nullptr) {
  delta.require_positive("rate");
  SafePointReport rep;
  rep.c0 = c0;
  rep.c_star = c_star;
  rep.t0 = t0;
  if (delta.infimum() >= c0) {
    rep.no_tipping_possible = true;
    rep.conclusion = "no tipping possible";
    return rep;
  }
  rep.s1 = first_crossing(delta, d, c0);

  std::vector<double> g;
  for (double t : grid)
    if (t >= t0) g.push_back(t);
  if (g.empty()) throw config_error("safe-point grid has no time >= t0");
  const TransitionMechanism mech(gamma, TimeDependentRate{delta, d});
  const auto u = upper_pullback(field, mech, 0.0, g.front(), g.back(), ac, g);
  const auto mf = m_curve(field, gamma, delta, d, g, ac, cache);
  const auto future = detail::frozen_repeller(field, gamma, c_star, g.front(), g, ac);
  for (std::size_t i = 0; i < g.size(); ++i) {
    SafePointRow row;
    row.t = g[i];
    row.u_delta = u.trajectory.covers(g[i]) ? u.trajectory(g[i]) : std::nan("");
    row.m_frozen = mf[i];
    row.m_future = detail::value_or_nan(future, g[i]);
    const bool safe = row.u_delta > row.m_frozen;
    const bool nr = row.u_delta < row.m_future;
    if (safe && !nr) {
      row.flag = "safe";
      rep.safe.push_back(row.t);
    } else if (nr && !safe) {
      row.flag = "no-return";
      rep.no_return.push_back(row.t);
    } else {
      row.flag = "neither";
    }
    rep.rows.push_back(row);
  }
  if (!rep.safe.empty() && rep.no_return.empty()) rep.conclusion = "tracking";
  else if (rep.safe.empty() && !rep.no_return.empty()) rep.conclusion = "tipping";
  else rep.conclusion = "undetermined";
  return rep;
}

struct ReactionConfig {
  ClassifyConfig classify{};
  double T = 50.0;
  double t_min = -400.0;
  double t_max = 400.0;
  double grid_step = 0.1;
  unsigned threads = 1;
};

/// Pieces of the reaction experiment that do not depend on (r, kappa): the
/// unreacted solution u_Delta, its FTLE series and the future structure.
struct ReactionSetup {
  TransitionMechanism mech;
  Profile gamma, delta;
  double horizon = 0.0;
  PullbackSolution u;
  FtleSeries series;
  double U = 0.0, M = 0.0, Lw = 0.0;  // future estimates at +T_h
  double track_tol = 0.0;
  double sep_tol = 0.0;
};

struct ReactionOutcome {
  Case label = Case::indeterminate;
  std::optional<double> t1;
  double terminal = std::nan("");
  Case unreacted = Case::indeterminate;
  std::string note;
};

namespace detail {

inline Case basin_label(double x, const ReactionSetup& s, std::string* note) {
  if (x > s.M + s.sep_tol && std::abs(x - s.U) < s.track_tol) return Case::A;
  if (x < s.M - s.sep_tol && std::abs(x - s.Lw) < s.track_tol) return Case::C2;
  if (note) *note = "terminal value not within track_tol of a future attractor";
  return Case::indeterminate;
}

}  // namespace detail

template <ScalarField F>
ReactionSetup reaction_setup(const F& field, const Profile& gamma, const Profile& delta,
                             const ReactionConfig& cfg = {}) {
  if (field.concavity() != Concavity::d_concave) throw config_error("the reaction experiment needs a d-concave model");
  const auto& ac = cfg.classify.attractors;
  ReactionSetup s;
  s.mech = TransitionMechanism(gamma, TimeDependentRate{delta, 1.0});
  s.gamma = gamma;
  s.delta = delta;
  s.u = upper_pullback(field, s.mech, cfg.T, cfg.t_min, cfg.t_max, ac);
  s.horizon = s.u.horizon;
  if (!s.u.trajectory.completed()) throw numerical_error("u_Delta left the state space");
  s.series = ftle_series(field, s.mech, s.u, cfg.T, uniform_grid(cfg.t_min, cfg.t_max, cfg.grid_step));
  const double Th = s.horizon;
  const auto future = limit_hyperbolic_solutions(field, s.mech.future_limit(), Interval{Th - 1.0, Th}, ac);
  if (!future.complete) throw missing_structure_error("future limit equation lacks the hyperbolic structure");
  s.U = future.get(Role::upper_attractive)(Th);
  s.M = future.get(Role::middle_repulsive)(Th);
  s.Lw = future.get(Role::lower_attractive)(Th);
  s.track_tol = cfg.classify.track_fraction * (s.U - s.Lw);
  s.sep_tol = ac.sep_tol;
  return s;
}

/// u follows the unreacted equation until the warning time t1; from t1 on
/// the rate is Delta(t) + r tanh(b (t - t1)). Label by the terminal basin.
template <ScalarField F>
ReactionOutcome reaction_run(const F& field, const ReactionSetup& s, double r, double b, double kappa, double L,
                             const ReactionConfig& cfg = {}) {
  ReactionOutcome out;
  std::string note;
  out.unreacted = detail::basin_label(s.u.trajectory.final_state(), s, &note);
  out.t1 = warning_time(s.series, EwsConfig{kappa, L, cfg.t_min, cfg.t_max});
  if (!out.t1) {
    out.label = out.unreacted;
    out.terminal = s.u.trajectory.final_state();
    out.note = "no warning fired";
    return out;
  }
  const TransitionMechanism react(s.gamma, Reaction{s.delta, r, b, *out.t1});
  auto rhs = [&](double t, double x) { return field.f(t, x, react(t)); };
  const double Th = s.horizon;
  if (*out.t1 >= Th) {
    out.label = out.unreacted;
    out.terminal = s.u.trajectory.final_state();
    return out;
  }
  const auto tr = integrate(rhs, *out.t1, s.u.trajectory(*out.t1), Th, cfg.classify.attractors.integrator);
  if (!tr.completed()) {
    out.note = "reacted solution left the state space";
    return out;
  }
  out.terminal = tr.final_state();
  out.label = detail::basin_label(out.terminal, s, &out.note);
  return out;
}

template <ScalarField F>
ReactionOutcome reaction_run(const F& field, const Profile& gamma, const Profile& delta, double r, double b,
                             double kappa, double L, const ReactionConfig& cfg = {}) {
  return reaction_run(field, reaction_setup(field, gamma, delta, cfg), r, b, kappa, L, cfg);
}

/// Cell (r_i, kappa_j) holds the reaction_run label.
template <ScalarField F>
RegionGrid reaction_region(const F& field, const Profile& gamma, const Profile& delta,
                           const std::vector<double>& strengths, const std::vector<double>& kappas, double b,
                           double L, const ReactionConfig& cfg = {}) {
  RegionGrid grid("r", strengths, "kappa", kappas);
  const auto setup = reaction_setup(field, gamma, delta, cfg);
  parallel_for(strengths.size() * kappas.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t i = k / kappas.size(), j = k % kappas.size();
    try {
      const auto o = reaction_run(field, setup, strengths[i], b, kappas[j], L, cfg);
      grid.at(i, j) = std::string(to_string(o.label));
      grid.note(i, j) = o.note;
    } catch (const std::exception& e) {
      grid.at(i, j) = "error";
      grid.note(i, j) = e.what();
    }
  });
  return grid;
}

}  // namespace tipping

#endif  // TIPPING_EWS_HPP
