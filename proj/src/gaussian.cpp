#include "ivtf/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "ivtf/error.hpp"

namespace ivtf {

namespace {
constexpr double kDegenerateRhoGap = 1e-12;
}

bool BvnParams::degenerate() const noexcept {
  return std::abs(rho) >= 1.0 - kDegenerateRhoGap;
}

// erfc carries full relative precision in both tails, so Phi(-x) keeps its
// digits far below the 1e-15 absolute target.
double std_normal_cdf(double x) noexcept {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_sf(double x) noexcept { return std_normal_cdf(-x); }

double std_normal_pdf(double x) noexcept {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kDomain, "normal quantile requires p in (0, 1), got " + std::to_string(p));
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double chi2_1_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kDomain, "alpha must lie in (0, 1)");
  }
  const double z = std_normal_quantile(1.0 - 0.5 * alpha);
  return z * z;
}

double bvn_density(const BvnParams& p, double t_ar, double f) {
  if (p.degenerate()) {
    throw Error(ErrorCode::kDegenerateCorrelation,
                "bivariate density undefined for |rho| = 1; use the univariate reduction");
  }
  const double x = t_ar - p.mean_tar;
  const double y = f - p.mean_f;
  const double one_minus = (1.0 - p.rho) * (1.0 + p.rho);
  const double quad = (x * x - 2.0 * p.rho * x * y + y * y) / one_minus;
  return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(one_minus));
}

}  // namespace ivtf
