#pragma once

// Tabulated F-dependent critical value c(F) for t^2.
//
// Knots hold sqrt(c) against sqrt(F); between knots sqrt(c) is linear in
// sqrt(F). Because the underlying curve is convex, the linear interpolant
// sits above it, so interpolation errs toward fewer rejections.

#include <span>
#include <vector>

namespace ivtf {

struct CvfKnot {
  double sqrt_f = 0.0;
  double crit_sqrt = 0.0;  ///< +infinity where the critical value is unbounded
};

class CriticalValueFunction {
 public:
  /// `tilde` is the raw curve (ascending in sqrt_f, starting at sqrt(q)).
  /// The assembled c(F) follows `tilde` below f_tilde and equals q from
  /// f_tilde on. With f_tilde = +inf the curve never pins: c(F) follows
  /// `tilde` throughout and holds its last value. Throws kDomain on
  /// malformed knots.
  CriticalValueFunction(double alpha, double f_tilde, std::vector<CvfKnot> tilde);

  double alpha() const noexcept { return alpha_; }
  double f_tilde() const noexcept { return f_tilde_; }
  /// q_{1-alpha}; c(F) is infinite below it.
  double lower_support() const noexcept { return q_; }
  double q() const noexcept { return q_; }

  /// Assembled knots: nonincreasing, pinned to sqrt(q) from sqrt(f_tilde) on.
  /// Where the curve stops: sqrt(f_tilde), or the last knot when unpinned.
  double flat_from() const noexcept;
  std::span<const CvfKnot> knots() const noexcept { return knots_; }
  /// The unpinned curve that makes the rho = 1 size exact.
  std::span<const CvfKnot> tilde_knots() const noexcept { return tilde_; }

  /// c(F); +infinity below the support or where a bracketing knot is unbounded.
  double eval(double F) const noexcept;
  /// sqrt(c) at sqrt(F) = |f|.
  double eval_sqrt(double abs_f) const noexcept;

 private:
  double alpha_;
  double q_;
  double f_tilde_;
  std::vector<CvfKnot> tilde_;
  std::vector<CvfKnot> knots_;
};

/// Interpolates sqrt(c) linearly on an ascending knot list; beyond the last
/// knot the last value holds. Infinite below the first knot.
double interpolate_sqrt_crit(std::span<const CvfKnot> knots, double abs_f) noexcept;

/// What happens beyond the last knot.
enum class RidgeTail {
  kHold,       ///< last value continues
  kRejectAll,  ///< every |f| past the last knot rejects
};

/// Pr[t^2 > c(F)] on the rho = 1 line t_AR = f - f0, f ~ N(f0, 1), for the
/// piecewise-linear sqrt(c) curve given by `knots`. Exact up to the normal
/// CDF: each knot piece reduces to quadratic inequalities in f.
double ridge_rejection_prob(std::span<const CvfKnot> knots, double f0,
                            RidgeTail tail = RidgeTail::kHold);

}  // namespace ivtf
