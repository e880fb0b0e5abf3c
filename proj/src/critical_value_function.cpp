#include "ivtf/critical_value_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"

namespace ivtf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Pieces farther than this from the mean carry < 1e-40 probability.
constexpr double kRidgeReach = 14.0;

// Pr[x1 < f < x2] for f ~ N(mean, 1), using the upper tail when both ends
// sit above the mean.
double normal_mass(double x1, double x2, double mean) {
  if (!(x2 > x1)) return 0.0;
  const double z1 = x1 - mean;
  const double z2 = x2 - mean;
  if (z1 > 0.0) return std_normal_sf(z1) - std_normal_sf(z2);
  return std_normal_cdf(z2) - std_normal_cdf(z1);
}

// Appends the subintervals of [lo, hi] where a x^2 + b x + c > 0.
template <class Sink>
void positive_parts(double a, double b, double c, double lo, double hi, Sink&& sink) {
  if (!(hi > lo)) return;
  double cuts[4];
  int n = 0;
  cuts[n++] = lo;
  if (a == 0.0) {
    if (b != 0.0) {
      const double r = -c / b;
      if (r > lo && r < hi) cuts[n++] = r;
    }
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc > 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (b + std::copysign(sq, b));
      double r1 = qq / a;
      double r2 = (qq != 0.0) ? c / qq : -r1;
      if (r1 > r2) std::swap(r1, r2);
      if (r1 > lo && r1 < hi) cuts[n++] = r1;
      if (r2 > lo && r2 < hi) cuts[n++] = r2;
    }
  }
  cuts[n++] = hi;
  for (int i = 0; i + 1 < n; ++i) {
    const double x0 = cuts[i];
    const double x1 = cuts[i + 1];
    double m = 0.5 * (x0 + x1);
    if (std::isinf(m)) m = std::isinf(x0) ? x1 - 1.0 : x0 + 1.0;
    if ((a * m + b) * m + c > 0.0) sink(x0, x1);
  }
}

}  // namespace

double interpolate_sqrt_crit(std::span<const CvfKnot> knots, double abs_f) noexcept {
  if (knots.empty() || abs_f < knots.front().sqrt_f) return kInf;
  if (abs_f >= knots.back().sqrt_f) return knots.back().crit_sqrt;
  auto it = std::upper_bound(knots.begin(), knots.end(), abs_f,
                             [](double x, const CvfKnot& k) { return x < k.sqrt_f; });
  const CvfKnot& hi = *it;
  const CvfKnot& lo = *(it - 1);
  if (std::isinf(lo.crit_sqrt) || std::isinf(hi.crit_sqrt)) return kInf;
  const double w = (abs_f - lo.sqrt_f) / (hi.sqrt_f - lo.sqrt_f);
  return lo.crit_sqrt + w * (hi.crit_sqrt - lo.crit_sqrt);
}

CriticalValueFunction::CriticalValueFunction(double alpha, double f_tilde, std::vector<CvfKnot> tilde)
    : alpha_(alpha), q_(chi2_1_quantile(alpha)), f_tilde_(f_tilde), tilde_(std::move(tilde)) {
  if (tilde_.size() < 2) throw Error(ErrorCode::kDomain, "critical value function needs >= 2 knots");
  for (std::size_t i = 1; i < tilde_.size(); ++i) {
    if (!(tilde_[i].sqrt_f > tilde_[i - 1].sqrt_f)) {
      throw Error(ErrorCode::kDomain, "knots must be strictly ascending in sqrt(F)");
    }
  }
  const double sq = std::sqrt(q_);
  const double root_tilde = std::sqrt(f_tilde_);
  if (!(root_tilde >= sq)) throw Error(ErrorCode::kDomain, "f_tilde must be >= q");
  for (const CvfKnot& k : tilde_) {
    if (k.sqrt_f < root_tilde) knots_.push_back(k);
  }
  if (std::isinf(root_tilde)) {
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (knots_[i].crit_sqrt > knots_[i - 1].crit_sqrt || knots_[i].crit_sqrt < sq) {
        throw Error(ErrorCode::kDomain, "unpinned knots must be nonincreasing and >= sqrt(q)");
      }
    }
    return;
  }
  knots_.push_back({root_tilde, sq});
  // One trailing knot keeps the pinned tail explicit in exported tables.
  if (tilde_.back().sqrt_f > root_tilde) knots_.push_back({tilde_.back().sqrt_f, sq});
}

double CriticalValueFunction::flat_from() const noexcept {
  return std::isinf(f_tilde_) ? knots_.back().sqrt_f : std::sqrt(f_tilde_);
}

double CriticalValueFunction::eval_sqrt(double abs_f) const noexcept {
  abs_f = std::abs(abs_f);
  if (abs_f * abs_f < q_) return kInf;
  if (abs_f * abs_f >= f_tilde_) return std::sqrt(q_);
  return interpolate_sqrt_crit(knots_, abs_f);
}

double CriticalValueFunction::eval(double F) const noexcept {
  if (!(F >= 0.0)) return kInf;
  if (F < q_) return kInf;
  if (F >= f_tilde_) return q_;
  const double s = interpolate_sqrt_crit(knots_, std::sqrt(F));
  return s * s;
}

double ridge_rejection_prob(std::span<const CvfKnot> knots, double f0, RidgeTail tail) {
  if (!(f0 >= 0.0)) throw Error(ErrorCode::kDomain, "ridge probability needs f0 >= 0");
  double prob = 0.0;
  const std::size_t n = knots.size();
  if (n == 0) return 0.0;
  // First piece whose positive image can matter.
  std::size_t j0 = 0;
  if (f0 > kRidgeReach) {
    auto it = std::lower_bound(knots.begin(), knots.end(), f0 - kRidgeReach,
                               [](const CvfKnot& k, double x) { return k.sqrt_f < x; });
    j0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - knots.begin()) - 1));
  }
  for (std::size_t j = j0; j < n; ++j) {
    const double ua = knots[j].sqrt_f;
    if (j + 1 == n && tail == RidgeTail::kRejectAll) {
      prob += std_normal_sf(ua - f0) + std_normal_cdf(-ua - f0);
      break;
    }
    const double ub = (j + 1 < n) ? knots[j + 1].sqrt_f : kInf;
    // Skip pieces whose f and -f images are both far from the mean.
    if (ua > f0 + kRidgeReach) break;

    double slope = 0.0;
    double icpt = knots[j].crit_sqrt;
    if (j + 1 < n) {
      const double sa = knots[j].crit_sqrt;
      const double sb = knots[j + 1].crit_sqrt;
      if (std::isinf(sa) || std::isinf(sb)) continue;
      slope = (sb - sa) / (ub - ua);
      icpt = sa - slope * ua;
    } else if (std::isinf(icpt)) {
      continue;
    }
    // Reject iff |f| |f - f0| > f0 (icpt + slope |f|).
    auto add_pos = [&](double x0, double x1) { prob += normal_mass(x0, x1, f0); };
    positive_parts(1.0, -f0 * (1.0 + slope), -f0 * icpt, std::max(ua, f0), ub, add_pos);
    positive_parts(-1.0, f0 * (1.0 - slope), -f0 * icpt, ua, std::min(ub, f0), add_pos);
    // Negative side, in u = -f.
    positive_parts(1.0, f0 * (1.0 - slope), -f0 * icpt, ua, ub,
                   [&](double u0, double u1) { prob += normal_mass(-u1, -u0, f0); });
  }
  return prob;
}

}  // namespace ivtf
