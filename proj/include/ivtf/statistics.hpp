#pragma once

// Statistic definitions for the single-instrument IV model and the exact
// identity linking t, t_AR, f and rho_hat.

namespace ivtf {

/// Published regression summary for one specification. Variances are robust
/// (or clustered) sampling variances supplied by the user.
struct IVSummary {
  double beta_iv_hat = 0.0;  ///< IV point estimate
  double var_beta = 1.0;     ///< V(beta_iv_hat)
  double pi_hat = 0.0;       ///< first-stage coefficient
  double var_pi = 1.0;       ///< V(pi_hat)
  double var_rf = 1.0;       ///< V(pi_hat * beta_hat), the reduced-form coefficient
  double cov_rf_fs = 0.0;    ///< COV(pi_hat * beta_hat, pi_hat)
  double beta_null = 0.0;    ///< hypothesized beta_0
};

struct CoreStats {
  double t = 0.0;
  double t_ar = 0.0;
  double f = 0.0;
  double rho_hat = 0.0;
  double F = 0.0;  ///< f^2
};

/// Throws kDegenerateVariance for non-positive variances or an invalid
/// covariance, kNullDenominator when the AR variance at beta_0 is not positive.
CoreStats core_stats_from_summary(const IVSummary& s);

/// t^2 = t_ar^2 / (1 - 2 rho t_ar / f + t_ar^2 / f^2).
/// Throws kSingularDenominator when f == 0 or the denominator vanishes.
double t_squared_identity(double t_ar, double f, double rho_hat);

}  // namespace ivtf
