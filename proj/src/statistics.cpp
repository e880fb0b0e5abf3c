#include "ivtf/statistics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ivtf/error.hpp"

namespace ivtf {

namespace {

constexpr double kRhoClampGap = 1e-12;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kDegenerateVariance, std::string(name) + " must be finite and > 0");
  }
}

}  // namespace

CoreStats core_stats_from_summary(const IVSummary& s) {
  require_positive(s.var_beta, "var_beta");
  require_positive(s.var_pi, "var_pi");
  require_positive(s.var_rf, "var_rf");
  const double cov_bound = std::sqrt(s.var_rf * s.var_pi);
  if (std::abs(s.cov_rf_fs) > cov_bound * (1.0 + kRhoClampGap)) {
    throw Error(ErrorCode::kDegenerateVariance, "|cov_rf_fs| exceeds sqrt(var_rf * var_pi)");
  }

  const double b0 = s.beta_null;
  // Variance of the contrast (reduced form - b0 * first stage).
  const double var_contrast = s.var_rf - 2.0 * b0 * s.cov_rf_fs + b0 * b0 * s.var_pi;
  if (!(var_contrast > 0.0)) {
    throw Error(ErrorCode::kNullDenominator, "AR variance at beta_0 is not positive");
  }

  CoreStats out;
  const double diff = s.beta_iv_hat - b0;
  out.t = diff / std::sqrt(s.var_beta);
  out.t_ar = s.pi_hat * diff / std::sqrt(var_contrast);
  out.f = s.pi_hat / std::sqrt(s.var_pi);
  out.F = out.f * out.f;

  double rho = (s.cov_rf_fs - b0 * s.var_pi) / std::sqrt(var_contrast * s.var_pi);
  if (std::abs(rho) > 1.0) {
    if (std::abs(rho) - 1.0 > kRhoClampGap) {
      throw Error(ErrorCode::kDegenerateVariance, "implied rho_hat outside [-1, 1]");
    }
    rho = std::copysign(1.0, rho);
  }
  out.rho_hat = rho;
  return out;
}

double t_squared_identity(double t_ar, double f, double rho_hat) {
  if (f == 0.0) {
    throw Error(ErrorCode::kSingularDenominator, "t-ratio identity undefined at f = 0");
  }
  const double ratio = t_ar / f;
  const double denom = 1.0 - 2.0 * rho_hat * ratio + ratio * ratio;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kSingularDenominator, "t-ratio identity denominator vanishes (t is infinite)");
  }
  return t_ar * t_ar / denom;
}

}  // namespace ivtf
