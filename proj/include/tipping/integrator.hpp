#ifndef TIPPING_INTEGRATOR_HPP
#define TIPPING_INTEGRATOR_HPP

// Scalar nonautonomous ODE integration x' = rhs(t, x), forward or backward
// in time, with Hermite-based dense output and detection of the state
// leaving a bounding interval (finite-time blow-up).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tipping/error.hpp"

namespace tipping {

enum class Method { dopri54, rk4 };

struct IntegratorConfig {
  Method method = Method::dopri54;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 1.0;
  double fixed_step = 1e-2;  // rk4 only
  // Blow-up is declared when the state leaves [lower_bound, upper_bound].
  double lower_bound = -1e6;
  double upper_bound = 1e6;
  std::size_t max_steps = 50'000'000;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw config_error("tolerances must be positive");
    if (!(max_step > 0.0) || !(fixed_step > 0.0)) throw config_error("step sizes must be positive");
    if (!(lower_bound < upper_bound)) throw config_error("blow-up bounds must satisfy lower < upper");
    if (max_steps == 0) throw config_error("max_steps must be positive");
  }

  IntegratorConfig with_bounds(double lo, double hi) const {
    IntegratorConfig c = *this;
    c.lower_bound = lo;
    c.upper_bound = hi;
    return c;
  }
};

enum class Direction { forward, backward };

struct BlowUp {
  double time = 0.0;
  int sign = 0;  // +1 escaped through the upper bound, -1 through the lower
};

/// Numerical solution on a strictly increasing time grid, regardless of the
/// direction it was computed in. Samples carry the slope rhs(t_i, x_i) so
/// that evaluation between nodes is a cubic Hermite interpolation, corrected
/// by the quartic dense-output term of the Dormand-Prince pair.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Direction dir, std::vector<double> t, std::vector<double> x, std::vector<double> dx,
             std::optional<BlowUp> blow_up, std::vector<double> corr = {})
      : dir_(dir),
        t_(std::move(t)),
        x_(std::move(x)),
        dx_(std::move(dx)),
        corr_(std::move(corr)),
        blow_up_(blow_up) {
    if (corr_.size() != t_.size()) corr_.assign(t_.size(), 0.0);
  }

  Direction direction() const noexcept { return dir_; }
  bool completed() const noexcept { return !blow_up_; }
  const std::optional<BlowUp>& blow_up() const noexcept { return blow_up_; }

  std::size_t size() const noexcept { return t_.size(); }
  const std::vector<double>& times() const noexcept { return t_; }
  const std::vector<double>& states() const noexcept { return x_; }
  const std::vector<double>& slopes() const noexcept { return dx_; }
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  bool covers(double t) const { return !t_.empty() && t_.front() <= t && t <= t_.back(); }

  /// Value where the integration started / ended.
  double initial_state() const { return dir_ == Direction::forward ? x_.front() : x_.back(); }
  double final_state() const { return dir_ == Direction::forward ? x_.back() : x_.front(); }
  double final_time() const { return dir_ == Direction::forward ? t_.back() : t_.front(); }

  /// Index i with t_i <= t <= t_{i+1}.
  std::size_t segment(double t) const {
    if (!covers(t)) {
      throw numerical_error("trajectory evaluated at t=" + std::to_string(t) +
                            " outside its span [" + std::to_string(t_.empty() ? 0.0 : t_.front()) +
                            ", " + std::to_string(t_.empty() ? 0.0 : t_.back()) + "]");
    }
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - t_.begin());
    if (i == 0) return 0;
    i -= 1;
    return std::min(i, t_.size() - 2);
  }

  double operator()(double t) const {
    if (t_.size() == 1) {
      if (t == t_.front()) return x_.front();
      segment(t);  // throws
    }
    const std::size_t i = segment(t);
    if (t == t_[i]) return x_[i];
    if (t == t_[i + 1]) return x_[i + 1];
    return hermite(i, t);
  }

 private:
  // Cubic Hermite plus the quartic term s^2 (1-s)^2 corr of the
  // Dormand-Prince continuous extension (zero for rk4 steps).
  double hermite(std::size_t i, double t) const {
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    const double q = s * (1.0 - s);
    return h00 * x_[i] + h10 * h * dx_[i] + h01 * x_[i + 1] + h11 * h * dx_[i + 1] +
           q * q * corr_[i];
  }

  Direction dir_ = Direction::forward;
  std::vector<double> t_, x_, dx_;
  std::vector<double> corr_;  // corr_[i] belongs to the step [t_i, t_{i+1}]
  std::optional<BlowUp> blow_up_;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat (error weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// Evaluates rhs and reports domain problems as a non-finite value so that the
// step controller can retreat.
template <class Rhs>
double safe_eval(Rhs& rhs, double t, double x) {
  try {
    return rhs(t, x);
  } catch (const domain_error&) {
    return std::nan("");
  }
}

struct Sample {
  double t, x, dx;
  double corr = 0.0;  // dense-output correction of the step ending here
};

// Dense-output weights of the Dormand-Prince pair.
struct DopriDense {
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

// Integrates y' = g(s, y) for increasing s. Samples are returned in
// integration order.
template <class G>
std::vector<Sample> integrate_increasing(G& g, double s0, double y0, double s1,
                                         const IntegratorConfig& cfg,
                                         std::optional<BlowUp>& blow,
                                         const std::vector<double>& stops) {
  std::vector<Sample> out;
  double dy0 = g(s0, y0);
  if (!std::isfinite(dy0)) throw numerical_error("right-hand side is not finite at the initial point");
  out.push_back({s0, y0, dy0});
  const double span = s1 - s0;
  const double min_step = 1e-14 * std::max(1.0, std::max(std::abs(s0), std::abs(s1)));

  auto outside = [&](double y) { return y < cfg.lower_bound || y > cfg.upper_bound; };
  auto record_escape = [&](const Sample& a, const Sample& b) {
    // Locate the bound crossing on the Hermite interpolant of the step.
    const double bound = b.x > cfg.upper_bound ? cfg.upper_bound : cfg.lower_bound;
    const double h = b.t - a.t;
    auto herm = [&](double s) {
      const double u = (s - a.t) / h, u2 = u * u, u3 = u2 * u;
      return (2 * u3 - 3 * u2 + 1) * a.x + (u3 - 2 * u2 + u) * h * a.dx + (-2 * u3 + 3 * u2) * b.x +
             (u3 - u2) * h * b.dx;
    };
    double lo = a.t, hi = b.t;
    for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++k) {
      const double m = 0.5 * (lo + hi);
      const double v = herm(m);
      if ((bound > 0 && v >= bound) || (bound < 0 && v <= bound) || (v - bound) * (b.x - bound) > 0)
        hi = m;
      else
        lo = m;
    }
    const double xe = herm(hi);
    double dxe = g(hi, xe);
    if (!std::isfinite(dxe)) dxe = b.dx;
    out.push_back({hi, xe, dxe});
    blow = BlowUp{hi, b.x > cfg.upper_bound ? +1 : -1};
  };

  if (outside(y0)) {
    blow = BlowUp{s0, y0 > cfg.upper_bound ? +1 : -1};
    return out;
  }

  if (cfg.method == Method::rk4) {
    const std::size_t n = static_cast<std::size_t>(std::ceil(span / cfg.fixed_step - 1e-9));
    if (n > cfg.max_steps) throw numerical_error("step count limit exceeded");
    const double h = span / static_cast<double>(n);
    double s = s0, y = y0, k1 = dy0;
    for (std::size_t i = 0; i < n; ++i) {
      const double k2 = g(s + h / 2, y + h / 2 * k1);
      const double k3 = g(s + h / 2, y + h / 2 * k2);
      const double k4 = g(s + h, y + h * k3);
      const double yn = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      const double sn = (i + 1 == n) ? s1 : s0 + h * static_cast<double>(i + 1);
      if (!std::isfinite(yn)) throw numerical_error("right-hand side produced a non-finite value");
      const double kn = outside(yn) ? g(sn, std::clamp(yn, cfg.lower_bound, cfg.upper_bound))
                                    : g(sn, yn);
      Sample next{sn, yn, std::isfinite(kn) ? kn : k1};
      if (outside(yn)) {
        record_escape(out.back(), next);
        return out;
      }
      out.push_back(next);
      s = sn;
      y = yn;
      k1 = next.dx;
    }
    return out;
  }

  using D = Dopri;
  double h = std::min({cfg.max_step, span, 1e-2 * std::max(1.0, span) > span ? span : 1e-2});
  {
    // Initial step from the scale of the solution and its slope.
    const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y0);
    const double d0 = std::abs(y0) / sc, d1 = std::abs(dy0) / sc;
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min({h0, cfg.max_step, span});
    h = std::max(h, min_step);
  }

  double s = s0, y = y0, k1 = dy0;
  std::size_t steps = 0;
  double err_prev = 1e-4;
  std::size_t next_stop = 0;
  while (next_stop < stops.size() && stops[next_stop] <= s0 + min_step) ++next_stop;
  while (s < s1) {
    if (++steps > cfg.max_steps) throw numerical_error("step count limit exceeded");
    double target = s1;
    while (next_stop < stops.size() && stops[next_stop] <= s + min_step) ++next_stop;
    if (next_stop < stops.size() && stops[next_stop] < s1 - min_step) target = stops[next_stop];
    const double h_proposed = h;
    bool clipped = false;
    if (s + h >= target || target - (s + h) < min_step) {
      h = target - s;
      clipped = true;

    }
    const double k2 = safe_eval(g, s + D::c2 * h, y + h * D::a21 * k1);
    const double k3 = safe_eval(g, s + D::c3 * h, y + h * (D::a31 * k1 + D::a32 * k2));
    const double k4 = safe_eval(g, s + D::c4 * h, y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
    const double k5 = safe_eval(
        g, s + D::c5 * h, y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
    const double k6 = safe_eval(
        g, s + h, y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5));
    const double yn = y + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
    const double sn = clipped ? target : s + h;
    const double k7 = std::isfinite(yn) ? safe_eval(g, sn, yn) : std::nan("");

    double err;
    if (!std::isfinite(yn) || !std::isfinite(k7)) {
      err = HUGE_VAL;
    } else {
      const double e =
          h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y), std::abs(yn));
      err = std::abs(e) / sc;
    }

    if (err <= 1.0) {
      using DD = DopriDense;
      Sample next{sn, yn, k7,
                  h * (DD::d1 * k1 + DD::d3 * k3 + DD::d4 * k4 + DD::d5 * k5 + DD::d6 * k6 +
                       DD::d7 * k7)};
      if (outside(yn)) {
        next.corr = 0.0;
        record_escape(out.back(), next);
        return out;
      }
      out.push_back(next);
      s = sn;
      y = yn;
      k1 = k7;
      // PI step-size control.
      const double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(err, 1e-4);
      h = std::min(h * fac, cfg.max_step);
      if (clipped) h = std::min(std::max(h, h_proposed), cfg.max_step);
    } else {
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      h *= fac;
      if (h < min_step) {
        if (!std::isfinite(err)) throw numerical_error("right-hand side produced a non-finite value");
        throw numerical_error("step size underflow at t=" + std::to_string(s));
      }
    }
  }
  return out;
}

}  // namespace detail

/// Solves x' = rhs(t, x), x(t_start) = x0 up to t_end (either direction).
/// Backward integration uses s = -t, i.e. y' = -rhs(-s, y).
///
/// `stops` are times the adaptive method lands on exactly, so that the
/// trajectory is node-accurate there (the fixed-step method ignores them).
template <class Rhs>
Trajectory integrate(Rhs&& rhs, double t_start, double x0, double t_end,
                     const IntegratorConfig& cfg = {}, const std::vector<double>& stops = {}) {
  cfg.validate();
  if (!std::isfinite(t_start) || !std::isfinite(t_end)) throw config_error("time span must be finite");
  if (t_start == t_end) throw config_error("integration span is empty (t_start == t_end)");
  if (!std::isfinite(x0)) throw config_error("initial state must be finite");

  std::optional<BlowUp> blow;
  std::vector<double> t, x, dx, corr;
  if (t_end > t_start) {
    auto g = [&](double s, double y) { return rhs(s, y); };
    std::vector<double> st(stops);
    std::sort(st.begin(), st.end());
    auto samples = detail::integrate_increasing(g, t_start, x0, t_end, cfg, blow, st);
    t.reserve(samples.size());
    x.reserve(samples.size());
    dx.reserve(samples.size());
    corr.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& p = samples[i];
      t.push_back(p.t);
      x.push_back(p.x);
      dx.push_back(p.dx);
      corr.push_back(i + 1 < samples.size() ? samples[i + 1].corr : 0.0);
    }
    return Trajectory(Direction::forward, std::move(t), std::move(x), std::move(dx), blow,
                      std::move(corr));
  }

  auto g = [&](double s, double y) { return -rhs(-s, y); };
  std::vector<double> st;
  st.reserve(stops.size());
  for (double v : stops) st.push_back(-v);
  std::sort(st.begin(), st.end());
  auto samples = detail::integrate_increasing(g, -t_start, x0, -t_end, cfg, blow, st);
  if (blow) blow->time = -blow->time;
  const std::size_t n = samples.size();
  t.resize(n);
  x.resize(n);
  dx.resize(n);
  corr.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = samples[n - 1 - i];
    t[i] = -p.t;
    x[i] = p.x;
    dx[i] = -p.dx;
    // The step [t_i, t_{i+1}] is the integration step ending at sample n-1-i.
    if (i + 1 < n) corr[i] = p.corr;
  }
  return Trajectory(Direction::backward, std::move(t), std::move(x), std::move(dx), blow,
                    std::move(corr));
}

/// Writes `t,x` rows at 17 significant digits.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto old = os.precision(17);
  os << "t,x\n";
  for (std::size_t i = 0; i < traj.size(); ++i) os << traj.times()[i] << ',' << traj.states()[i] << '\n';
  os.precision(old);
}

}  // namespace tipping

#endif  // TIPPING_INTEGRATOR_HPP
