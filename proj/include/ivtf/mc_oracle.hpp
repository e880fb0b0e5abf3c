#pragma once

// Monte Carlo oracle for rejection probabilities and a synthetic IV data
// generator.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ivtf/procedure.hpp"
#include "ivtf/statistics.hpp"

namespace ivtf {

struct McConfig {
  std::uint64_t n_draws = 1'000'000;  ///< >= 1e4
  std::uint64_t seed = 0;
  NuisancePoint point;
};

struct McEstimate {
  double estimate = 0.0;
  double mc_se = 0.0;  ///< binomial standard error
  std::uint64_t rejections = 0;
  std::uint64_t n_draws = 0;
};

/// Draws per substream. Substream k covers draws [k * kMcBatch, (k + 1) * kMcBatch).
inline constexpr std::size_t kMcBatch = 65536;

/// Seed of substream `index` derived from the master seed (splitmix64).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Fills f[i] = f0 + z1, t_ar[i] = rho (f[i] - f0) + sqrt(1 - rho^2) z2 from
/// substream `index`. On rho = +-1, t_ar = +-(f - f0) exactly.
void draw_null_pairs(std::uint64_t seed, std::uint64_t index, const NuisancePoint& p,
                     double* t_ar, double* f, std::size_t n);

/// Empirical rejection rate of proc at cfg.point. Deterministic given the
/// seed; substreams run in parallel. Throws kDomain for n_draws < 1e4 or |rho| > 1.
McEstimate mc_rejection(const Procedure& proc, const McConfig& cfg);

struct SyntheticDGP {
  std::size_t n_obs = 1000;  ///< >= 50
  double beta = 0.0;
  double pi = 1.0;
  double rho_uv = 0.0;  ///< corr(u, v)
  double error_scale = 1.0;
  double beta_null = 0.0;
};

struct SyntheticSample {
  IVSummary summary;
  CoreStats direct;  ///< from the data moments, with t from the IV residuals
};

/// Z ~ N(0, 1), X = Z pi + v, Y = X beta + u with an intercept; HC0 variances.
/// Throws kDomain for n_obs < 50 or |rho_uv| > 1, kDegenerateSample when
/// the sample first-stage coefficient is exactly zero.
SyntheticSample simulate_iv_dataset(const SyntheticDGP& dgp, std::uint64_t seed);

/// The summary and direct statistics of one just-identified sample after
/// partialling out the intercept. Throws kDomain on mismatched lengths or
/// n < 3 and kDegenerateSample when sum z x is exactly zero.
SyntheticSample summarize_iv_data(std::vector<double> Z, std::vector<double> X, std::vector<double> Y,
                                  double beta_null);

}  // namespace ivtf
