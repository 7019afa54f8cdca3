#ifndef TIPPING_QUADRATURE_HPP
#define TIPPING_QUADRATURE_HPP

// Integrals of g(s, x(s)) along a dense trajectory, by Gauss-Legendre rules
// on the trajectory's own steps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tipping/error.hpp"
#include "tipping/integrator.hpp"

namespace tipping {

namespace detail {

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 5> kGlNodes = {
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGlWeights = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
    0.2369268850561891};

template <class G>
double gauss_legendre(const Trajectory& traj, G& g, double a, double b, int pieces) {
  if (b <= a) return 0.0;
  const double h = (b - a) / pieces;
  double sum = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double lo = a + h * p;
    const double mid = lo + 0.5 * h;
    double part = 0.0;
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
      const double s = mid + 0.5 * h * kGlNodes[k];
      part += kGlWeights[k] * g(s, traj(s));
    }
    sum += 0.5 * h * part;
  }
  return sum;
}

}  // namespace detail

/// Running integral C(t) = int_{t_min}^{t} g(s, x(s)) ds along a trajectory.
/// Each trajectory step is split into `pieces` sub-intervals; the number of
/// pieces is doubled until two successive refinements agree to `tol` at
/// every node.
template <class G>
class CumulativeIntegral {
 public:
  CumulativeIntegral(const Trajectory& traj, G g, double tol = 1e-6, int max_pieces = 64)
      : traj_(&traj), g_(std::move(g)) {
    if (traj.size() < 2) throw numerical_error("cumulative integral needs at least one step");
    std::vector<double> coarse = build(1);
    int pieces = 1;
    while (true) {
      std::vector<double> fine = build(pieces * 2);
      double diff = 0.0;
      for (std::size_t i = 0; i < fine.size(); ++i) diff = std::max(diff, std::abs(fine[i] - coarse[i]));
      pieces *= 2;
      coarse = std::move(fine);
      if (diff < tol) break;
      if (pieces >= max_pieces) throw numerical_error("quadrature refinement did not converge");
    }
    pieces_ = pieces;
    nodes_ = std::move(coarse);
    refinement_ = pieces;
  }

  double t_min() const { return traj_->t_min(); }
  double t_max() const { return traj_->t_max(); }
  int pieces() const noexcept { return refinement_; }

  double operator()(double t) const {
    const std::size_t i = traj_->segment(t);
    const double ti = traj_->times()[i];
    if (t == ti) return nodes_[i];
    return nodes_[i] + detail::gauss_legendre(*traj_, g_, ti, t, pieces_);
  }

  /// int_a^b g ds.
  double integral(double a, double b) const { return (*this)(b) - (*this)(a); }

 private:
  std::vector<double> build(int pieces) {
    const auto& t = traj_->times();
    std::vector<double> c(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
      c[i] = c[i - 1] + detail::gauss_legendre(*traj_, g_, t[i - 1], t[i], pieces);
    }
    return c;
  }

  const Trajectory* traj_;
  mutable G g_;
  std::vector<double> nodes_;
  int pieces_ = 1;
  int refinement_ = 1;
};

}  // namespace tipping

#endif  // TIPPING_QUADRATURE_HPP
