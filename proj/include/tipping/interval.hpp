#ifndef TIPPING_INTERVAL_HPP
#define TIPPING_INTERVAL_HPP

#include <algorithm>

namespace tipping {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  double mid() const noexcept { return 0.5 * (lo + hi); }
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  bool empty() const noexcept { return !(lo < hi); }
};

}  // namespace tipping

#endif  // TIPPING_INTERVAL_HPP
