#pragma once

// Rejection-region geometry in (t_AR, f) space.
//
// For fixed f the event t^2 > crit is the quadratic inequality
//   (f^2 - crit) t_ar^2 + 2 crit rho f t_ar - crit f^2 > 0,
// so the rejected t_ar values form either the outside or the inside of the
// two boundary roots, or nothing at all when f^2 < crit (1 - rho^2).

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

namespace ivtf {

struct RegionSpec {
  double crit = 0.0;  ///< cutoff for t^2
  double rho = 0.0;
};

/// Closed interval on the extended real line; ends may be +-infinity.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// At most two disjoint intervals, ascending.
class IntervalSet {
 public:
  void add(double lo, double hi) {
    if (hi > lo) items_[size_++] = {lo, hi};
  }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  const Interval* begin() const noexcept { return items_.data(); }
  const Interval* end() const noexcept { return items_.data() + size_; }

 private:
  std::array<Interval, 2> items_{};
  std::size_t size_ = 0;
};

/// Solutions of t^2(t_ar, f, rho) = crit in t_ar, ascending.
/// Throws kAsymptote when f^2 == crit, kNoRealRoot when the discriminant is
/// negative, kDomain when f == 0 or crit <= 0.
std::pair<double, double> boundary_roots(double f, const RegionSpec& spec);

/// The set of t_ar with t^2 > crit at this f. Total: handles the asymptote
/// (one end at infinity) and the empty case without throwing. f == 0 gives
/// the empty set (t is identically zero there).
IntervalSet t_ar_rejection_set(double f, double crit, double rho);

/// f^2 (f - f0)^2 / f0^2: t^2 on the rho = 1 line t_ar = f - f0.
/// Throws kDegenerateStrength when f0 == 0.
double quartic_t2_rho1(double f, double f0);

/// Crossings of quartic_t2_rho1 with crit in t_ar = f - f0 coordinates,
/// ascending: the outer pair always, plus the inner pair when
/// f0 >= 4 sqrt(crit) (coincident at equality). Empty when f0 == 0.
std::vector<double> rho1_rejection_roots(double f0, double crit);

}  // namespace ivtf
