#include "ivtf/regions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ivtf/error.hpp"

namespace ivtf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadraticRoots {
  int count = 0;  // 0 or 2; a vanishing leading coefficient reports one finite root
  double lo = 0.0;
  double hi = 0.0;
};

// Roots of a t^2 + 2 h t + c = 0 with the conjugate form for the smaller
// root, so nothing cancels when a -> 0 near the asymptote f^2 = crit.
QuadraticRoots stable_roots(double a, double h, double c, double disc) {
  QuadraticRoots r;
  if (disc < 0.0) return r;
  const double sq = std::sqrt(disc);
  const double qq = -(h + std::copysign(sq, h));
  double r1 = 0.0;
  double r2 = 0.0;
  if (qq == 0.0) {
    // h == 0 and disc == 0
    r1 = r2 = 0.0;
  } else {
    r1 = (a != 0.0) ? qq / a : std::copysign(kInf, qq);
    r2 = c / qq;
  }
  r.count = 2;
  r.lo = std::min(r1, r2);
  r.hi = std::max(r1, r2);
  return r;
}

}  // namespace

std::pair<double, double> boundary_roots(double f, const RegionSpec& spec) {
  const double c = spec.crit;
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::kDomain, "crit must be finite and > 0");
  if (f == 0.0) throw Error(ErrorCode::kDomain, "boundary roots undefined at f = 0");
  const double f2 = f * f;
  const double a = f2 - c;
  if (a == 0.0) throw Error(ErrorCode::kAsymptote, "f^2 equals crit: boundary escapes to infinity");
  const double h = c * spec.rho * f;
  // disc/4 = c f^2 (f^2 - c (1 - rho^2))
  const double disc = c * f2 * (f2 - c * (1.0 - spec.rho) * (1.0 + spec.rho));
  if (disc < 0.0) throw Error(ErrorCode::kNoRealRoot, "no real boundary: the whole t_ar line is accepted");
  const QuadraticRoots r = stable_roots(a, h, -c * f2, disc);
  return {r.lo, r.hi};
}

IntervalSet t_ar_rejection_set(double f, double crit, double rho) {
  IntervalSet out;
  if (f == 0.0 || !(crit < kInf)) return out;
  const double f2 = f * f;
  const double a = f2 - crit;
  const double h = crit * rho * f;
  const double c = -crit * f2;
  const double disc = crit * f2 * (f2 - crit * (1.0 - rho) * (1.0 + rho));

  if (a == 0.0) {
    // Linear: 2 h t > crit f^2.
    if (h == 0.0) return out;
    const double root = -c / (2.0 * h);
    if (h > 0.0) {
      out.add(root, kInf);
    } else {
      out.add(-kInf, root);
    }
    return out;
  }
  if (disc <= 0.0) {
    // Leading coefficient negative here, so the quadratic never exceeds zero.
    if (a > 0.0) out.add(-kInf, kInf);
    return out;
  }
  const QuadraticRoots r = stable_roots(a, h, c, disc);
  if (a > 0.0) {
    out.add(-kInf, r.lo);
    out.add(r.hi, kInf);
  } else {
    out.add(r.lo, r.hi);
  }
  return out;
}

double quartic_t2_rho1(double f, double f0) {
  if (f0 == 0.0) {
    throw Error(ErrorCode::kDegenerateStrength,
                "f0 = 0 on the rho = 1 line: t is infinite almost surely");
  }
  const double g = f * (f - f0) / f0;
  return g * g;
}

std::vector<double> rho1_rejection_roots(double f0, double crit) {
  if (!(f0 >= 0.0)) throw Error(ErrorCode::kDomain, "f0 must be >= 0");
  if (!(crit > 0.0)) throw Error(ErrorCode::kDomain, "crit must be > 0");
  std::vector<double> roots;
  if (f0 == 0.0) return roots;
  // f (f - f0) = +-f0 sqrt(crit) with t = f - f0 gives t^2 + f0 t -+ f0 sqrt(crit) = 0.
  const double sc = std::sqrt(crit);
  const double outer = std::sqrt(f0 * f0 + 4.0 * f0 * sc);
  roots.push_back(0.5 * (-f0 - outer));
  const double inner_disc = f0 * f0 - 4.0 * f0 * sc;
  if (inner_disc >= 0.0) {
    const double inner = std::sqrt(inner_disc);
    roots.push_back(0.5 * (-f0 - inner));
    roots.push_back(-2.0 * f0 * sc / (f0 + inner));
  }
  // (-f0 + outer) / 2 rewritten through the conjugate.
  roots.push_back(2.0 * f0 * sc / (f0 + outer));
  return roots;
}

}  // namespace ivtf
