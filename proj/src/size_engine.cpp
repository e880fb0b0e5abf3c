#include "ivtf/size_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"
#include "ivtf/quadrature.hpp"
#include "ivtf/regions.hpp"

namespace ivtf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRidgeCut = 1e-6;   // |rho| beyond 1 - kRidgeCut is treated as 1
constexpr double kHalfWidth = 8.5;   // f truncation around f0
constexpr double kSharpSd = 0.3;     // conditional sd below which crossings are located

template <class> inline constexpr bool kAlwaysFalse = false;

// Pr[lo < x < hi] for x ~ N(0, 1), from whichever tail avoids cancellation.
double normal_band(double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (lo > 0.0) return std_normal_sf(lo) - std_normal_sf(hi);
  return std_normal_cdf(hi) - std_normal_cdf(lo);
}

// Pr[t_ar in set | f] with t_ar | f ~ N(mean, sd^2).
double conditional_mass(const IntervalSet& set, double mean, double sd) {
  double p = 0.0;
  for (const Interval& iv : set) p += normal_band((iv.lo - mean) / sd, (iv.hi - mean) / sd);
  return p;
}

double ar_conditional(double crit, double mean, double sd) {
  const double r = std::sqrt(crit);
  return std_normal_cdf((-r - mean) / sd) + std_normal_sf((r - mean) / sd);
}

// Root of f = s(f) scale on [sqrt(q), sqrt(f_tilde)], where s is the cvf's
// sqrt critical value; s - f/scale is decreasing there.
double cvf_crossing(const CriticalValueFunction& cvf, double scale) {
  const double root_q = std::sqrt(cvf.q());
  double lo = root_q;
  double hi = cvf.flat_from();
  auto h = [&](double f) { return cvf.eval_sqrt(f) * scale - f; };
  if (h(hi) > 0.0) {
    // Beyond hi s is flat, so the crossing is explicit.
    const double x = cvf.eval_sqrt(hi) * scale;
    return x >= hi ? x : kInf;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Mass of {|x - f0| > r, |x| <= b} for x ~ N(f0, 1), r >= 0, b >= 0.
double ar_fallback_mass(double r, double b, double f0) {
  // Complement of the acceptance band inside [-b, b].
  const double inside = normal_band(-b - f0, b - f0);
  const double lo = std::max(-b, f0 - r);
  const double hi = std::min(b, f0 + r);
  return std::max(0.0, inside - normal_band(lo - f0, hi - f0));
}

double ridge_prob(const Procedure& proc, double f0) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConventionalT> || std::is_same_v<T, ThresholdTF>) {
          return rejection_prob_rho1(proc, f0);
        } else if constexpr (std::is_same_v<T, HybridAR>) {
          return rejection_prob_rho1(ThresholdTF{p.crit, p.f_threshold}, f0) +
                 ar_fallback_mass(std::sqrt(p.crit), std::sqrt(p.f_threshold), f0);
        } else if constexpr (std::is_same_v<T, PureAR>) {
          return 2.0 * std_normal_cdf(-std::sqrt(p.crit));
        } else if constexpr (std::is_same_v<T, TFProcedure>) {
          return ridge_rejection_prob(p.cvf->knots(), f0);
        } else {
          static_assert(kAlwaysFalse<T>);
        }
      },
      proc);
}

// Where t^2 on the conditional-mean line t_ar = rho (f - f0) crosses
// crit(f), for f in [lo, hi] on the given sign branch. Near rho = 1 the
// conditional sd is tiny and the integrand switches between 0 and its
// envelope across a band of that width around these points.
template <class Crit>
void mean_line_crossings(Crit&& crit_of, double rho, double f0, double lo, double hi, double sign,
                         std::vector<double>& out) {
  auto g = [&](double x) {
    const double f = sign * x;
    const double m = rho * (f - f0);
    const double d = (m - rho * f) * (m - rho * f) + (1.0 - rho * rho) * f * f;
    const double c = crit_of(f);
    if (!(d > 0.0) || std::isinf(c)) return -1.0;
    return m * m * f * f / d - c;
  };
  constexpr double kStep = 0.005;
  double x0 = lo;
  double g0 = g(x0);
  while (x0 < hi) {
    const double x1 = std::min(hi, x0 + kStep);
    const double g1 = g(x1);
    if ((g0 > 0.0) != (g1 > 0.0)) {
      double a = x0;
      double b = x1;
      const bool up = g1 > 0.0;
      for (int i = 0; i < 60 && b - a > 1e-14; ++i) {
        const double mid = 0.5 * (a + b);
        ((g(mid) > 0.0) == up ? b : a) = mid;
      }
      out.push_back(0.5 * (a + b));
    }
    x0 = x1;
    g0 = g1;
  }
}

}  // namespace

double rejection_prob_rho1(const Procedure& proc, double f0) {
  if (!(f0 >= 0.0)) throw Error(ErrorCode::kDomain, "f0 must be >= 0");
  double crit = 0.0;
  double fbar = 0.0;
  if (const auto* c = std::get_if<ConventionalT>(&proc)) {
    crit = c->crit;
  } else if (const auto* t = std::get_if<ThresholdTF>(&proc)) {
    crit = t->crit;
    fbar = t->f_threshold;
  } else {
    throw Error(ErrorCode::kDomain, "closed form covers conventional and threshold rules only");
  }
  validate(proc);
  const double root_fbar = std::sqrt(fbar);
  if (f0 == 0.0) {
    // t is unbounded on the whole line: only the F condition bites.
    return fbar == 0.0 ? 1.0 : 2.0 * std_normal_cdf(-root_fbar);
  }
  const std::vector<double> r = rho1_rejection_roots(f0, crit);
  const double upper_cut = root_fbar - f0;
  const double lower_cut = -root_fbar - f0;
  const double ra_lo = r.front();
  const double ra_hi = r.back();
  double p = std_normal_sf(std::max(ra_hi, upper_cut)) + std_normal_cdf(std::min(ra_lo, lower_cut));
  if (r.size() == 4 && f0 > 4.0 * std::sqrt(crit) && upper_cut < r[2]) {
    p += normal_band(std::max(r[1], upper_cut), r[2]);
  }
  return p;
}

double hybrid_extra_term(double f_threshold, double crit, double f0) {
  if (!(crit > 0.0)) throw Error(ErrorCode::kDomain, "crit must be > 0");
  if (!(f_threshold >= 0.5 * crit)) throw Error(ErrorCode::kDomain, "requires f_threshold >= crit / 2");
  if (!(f0 >= 0.0)) throw Error(ErrorCode::kDomain, "f0 must be >= 0");
  return ar_fallback_mass(std::sqrt(crit), std::sqrt(f_threshold), f0);
}

double tf_asymptote(const CriticalValueFunction& cvf, double rho) {
  const double scale = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  if (scale == 0.0) return kInf;
  return cvf_crossing(cvf, scale);
}

SizeResult rejection_prob(const Procedure& proc, const NuisancePoint& p, double tol) {
  validate(proc);
  if (!(tol > 1e-12 && tol <= 1e-3)) throw Error(ErrorCode::kDomain, "tol must lie in (1e-12, 1e-3]");
  if (!(std::abs(p.rho) <= 1.0)) throw Error(ErrorCode::kDomain, "|rho| must be <= 1");
  if (!std::isfinite(p.f0)) throw Error(ErrorCode::kDomain, "f0 must be finite");
  const double rho = std::abs(p.rho);
  const double f0 = std::abs(p.f0);
  SizeResult out;
  out.point = p;

  if (const auto* ar = std::get_if<PureAR>(&proc)) {
    out.prob = 2.0 * std_normal_cdf(-std::sqrt(ar->crit));
    return out;
  }
  if (rho > 1.0 - kRidgeCut) {
    out.prob = std::clamp(ridge_prob(proc, f0), 0.0, 1.0);
    return out;
  }

  const double sd = std::sqrt((1.0 - rho) * (1.0 + rho));
  std::vector<double> interior;
  auto add_crit_breaks = [&](double crit) {
    interior.push_back(std::sqrt(crit));
    interior.push_back(std::sqrt(crit) * sd);
  };

  // t^2 cutoff at signed f (+inf where the rule never rejects on t^2).
  std::function<double(double)> crit_of;
  // Pr[reject | f] for signed f; t^2 is even under (t_ar, f) -> (-t_ar, -f).
  auto conditional = std::visit(
      [&](const auto& q) -> std::function<double(double)> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, ConventionalT>) {
          add_crit_breaks(q.crit);
          crit_of = [crit = q.crit](double) { return crit; };
          return [&, crit = q.crit](double f) {
            return conditional_mass(t_ar_rejection_set(f, crit, rho), rho * (f - f0), sd);
          };
        } else if constexpr (std::is_same_v<T, ThresholdTF>) {
          add_crit_breaks(q.crit);
          interior.push_back(std::sqrt(q.f_threshold));
          crit_of = [crit = q.crit](double) { return crit; };
          return [&, crit = q.crit, fbar = q.f_threshold](double f) {
            if (!(f * f > fbar)) return 0.0;
            return conditional_mass(t_ar_rejection_set(f, crit, rho), rho * (f - f0), sd);
          };
        } else if constexpr (std::is_same_v<T, HybridAR>) {
          add_crit_breaks(q.crit);
          interior.push_back(std::sqrt(q.f_threshold));
          crit_of = [crit = q.crit](double) { return crit; };
          return [&, crit = q.crit, fbar = q.f_threshold](double f) {
            const double mean = rho * (f - f0);
            if (!(f * f > fbar)) return ar_conditional(crit, mean, sd);
            return conditional_mass(t_ar_rejection_set(f, crit, rho), mean, sd);
          };
        } else if constexpr (std::is_same_v<T, TFProcedure>) {
          const CriticalValueFunction& cvf = *q.cvf;
          interior.push_back(std::sqrt(cvf.q()));
          interior.push_back(cvf.flat_from());
          for (const CvfKnot& k : cvf.knots()) {
            if (std::isfinite(k.crit_sqrt)) {
              interior.push_back(k.sqrt_f);
              break;
            }
          }
          interior.push_back(cvf_crossing(cvf, 1.0));
          interior.push_back(cvf_crossing(cvf, sd));
          crit_of = [cvfp = &cvf](double f) { return cvfp->eval(f * f); };
          return [&, cvfp = &cvf](double f) {
            const double c = cvfp->eval(f * f);
            if (std::isinf(c)) return 0.0;
            return conditional_mass(t_ar_rejection_set(f, c, rho), rho * (f - f0), sd);
          };
        } else {
          throw Error(ErrorCode::kDomain, "unsupported procedure");
        }
      },
      proc);

  auto paired = [&](double f) {
    return conditional(f) * std_normal_pdf(f - f0) + conditional(-f) * std_normal_pdf(f + f0);
  };
  const double lo = std::max(0.0, f0 - kHalfWidth);
  const double hi = f0 + kHalfWidth;
  interior.push_back(f0);
  if (sd < kSharpSd) {
    std::vector<double> cross;
    mean_line_crossings(crit_of, rho, f0, lo, hi, 1.0, cross);
    mean_line_crossings(crit_of, rho, f0, lo, hi, -1.0, cross);
    // Graded breaks on both sides so no panel straddles a transition band
    // whose width is of order sd.
    for (double x : cross) {
      interior.push_back(x);
      for (double w = 0.5 * sd; w < 1.0; w *= 4.0) {
        interior.push_back(x - w);
        interior.push_back(x + w);
      }
    }
  }
  const std::vector<double> breaks = quadrature::make_breaks(lo, hi, interior);
  const quadrature::Result r = quadrature::integrate(paired, breaks, 0.5 * tol);
  if (!r.converged || !(r.abs_err <= tol)) {
    throw Error(ErrorCode::kToleranceUnmet,
                fmt::format("quadrature error {:.3g} above tol {:.3g} at rho={}, f0={}", r.abs_err, tol,
                            p.rho, p.f0));
  }
  out.prob = std::clamp(r.value, 0.0, 1.0);
  out.abs_err = r.abs_err;
  return out;
}

}  // namespace ivtf
