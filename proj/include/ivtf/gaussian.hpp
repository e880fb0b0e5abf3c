#pragma once

// Standard-normal and bivariate-normal primitives.

namespace ivtf {

/// Parameters of the (t_AR, f) bivariate normal: unit variances, mean
/// (mean_tar, mean_f), correlation rho.
struct BvnParams {
  double mean_tar = 0.0;
  double mean_f = 0.0;
  double rho = 0.0;

  /// |rho| within 1e-12 of one: the mass sits on a line and there is no density.
  bool degenerate() const noexcept;
};

/// Phi(x). Accurate to ~1e-16 absolute; saturates to exactly 0/1 at +-inf.
double std_normal_cdf(double x) noexcept;

/// 1 - Phi(x), computed without cancellation for large x.
double std_normal_sf(double x) noexcept;

double std_normal_pdf(double x) noexcept;

/// Inverse of Phi on (0, 1).
double std_normal_quantile(double p);

/// (1 - alpha) quantile of chi^2(1), i.e. the squared two-sided normal
/// critical value. 0.05 gives 1.959964^2.
double chi2_1_quantile(double alpha);

/// Density of the bivariate normal at (t_ar, f). Throws
/// ErrorCode::kDegenerateCorrelation when p.degenerate().
double bvn_density(const BvnParams& p, double t_ar, double f);

}  // namespace ivtf
