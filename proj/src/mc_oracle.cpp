#include "ivtf/mc_oracle.hpp"

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "ivtf/error.hpp"
#include "ivtf/kernels/rejection_count.hpp"
#include "parallel.hpp"

namespace ivtf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct RuleSetup {
  kernels::Rule rule = kernels::Rule::kTsq;
  double crit = 0.0;
  double f_threshold = -1.0;
  const CriticalValueFunction* cvf = nullptr;
};

RuleSetup rule_for(const Procedure& proc) {
  return std::visit(
      [](const auto& p) -> RuleSetup {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConventionalT>) {
          return {kernels::Rule::kTsq, p.crit, -1.0, nullptr};
        } else if constexpr (std::is_same_v<T, ThresholdTF>) {
          return {kernels::Rule::kTsq, p.crit, p.f_threshold, nullptr};
        } else if constexpr (std::is_same_v<T, HybridAR>) {
          return {kernels::Rule::kHybrid, p.crit, p.f_threshold, nullptr};
        } else if constexpr (std::is_same_v<T, PureAR>) {
          return {kernels::Rule::kAr, p.crit, -1.0, nullptr};
        } else {
          return {kernels::Rule::kTsqPerDraw, 0.0, -1.0, p.cvf.get()};
        }
      },
      proc);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

void draw_null_pairs(std::uint64_t seed, std::uint64_t index, const NuisancePoint& p,
                     double* t_ar, double* f, std::size_t n) {
  std::mt19937_64 gen(substream_seed(seed, index));
  std::normal_distribution<double> z;
  const double s = std::sqrt(std::max(0.0, (1.0 - p.rho) * (1.0 + p.rho)));
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = z(gen);
    const double z2 = z(gen);
    f[i] = p.f0 + z1;
    t_ar[i] = p.rho * (f[i] - p.f0) + s * z2;
  }
}

McEstimate mc_rejection(const Procedure& proc, const McConfig& cfg) {
  validate(proc);
  if (cfg.n_draws < 10'000) {
    throw Error(ErrorCode::kDomain, fmt::format("n_draws {} below 10000", cfg.n_draws));
  }
  if (!(std::abs(cfg.point.rho) <= 1.0) || !std::isfinite(cfg.point.f0)) {
    throw Error(ErrorCode::kDomain, "rho must lie in [-1, 1] and f0 must be finite");
  }
  const RuleSetup setup = rule_for(proc);
  const std::uint64_t n_batches = (cfg.n_draws + kMcBatch - 1) / kMcBatch;
  std::vector<std::uint64_t> hits(n_batches, 0);

  detail::parallel_for(n_batches, [&](std::size_t b) {
    const std::size_t n =
        static_cast<std::size_t>(std::min<std::uint64_t>(kMcBatch, cfg.n_draws - b * kMcBatch));
    std::vector<double> t_ar(n), f(n), crit;
    draw_null_pairs(cfg.seed, b, cfg.point, t_ar.data(), f.data(), n);
    kernels::Batch batch{t_ar.data(), f.data(), nullptr, n, cfg.point.rho,
                         setup.crit, setup.f_threshold, setup.rule};
    if (setup.cvf) {
      crit.resize(n);
      for (std::size_t i = 0; i < n; ++i) crit[i] = setup.cvf->eval(f[i] * f[i]);
      batch.crit_per_draw = crit.data();
    }
    hits[b] = kernels::count_rejections(batch);
  });

  McEstimate out;
  out.n_draws = cfg.n_draws;
  for (auto h : hits) out.rejections += h;
  const double n = static_cast<double>(cfg.n_draws);
  out.estimate = static_cast<double>(out.rejections) / n;
  out.mc_se = std::sqrt(out.estimate * (1.0 - out.estimate) / n);
  return out;
}

SyntheticSample simulate_iv_dataset(const SyntheticDGP& dgp, std::uint64_t seed) {
  if (dgp.n_obs < 50) throw Error(ErrorCode::kDomain, "n_obs must be at least 50");
  if (!(std::abs(dgp.rho_uv) <= 1.0)) throw Error(ErrorCode::kDomain, "rho_uv must lie in [-1, 1]");
  if (!(dgp.error_scale > 0.0)) throw Error(ErrorCode::kDomain, "error_scale must be positive");

  const std::size_t n = dgp.n_obs;
  std::mt19937_64 gen(substream_seed(seed, 0));
  std::normal_distribution<double> z;
  const double s = std::sqrt((1.0 - dgp.rho_uv) * (1.0 + dgp.rho_uv));
  std::vector<double> Z(n), X(n), Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = z(gen);
    const double v = dgp.error_scale * z(gen);
    const double u = dgp.rho_uv * v + s * dgp.error_scale * z(gen);
    Z[i] = zi;
    X[i] = zi * dgp.pi + v;
    Y[i] = X[i] * dgp.beta + u;
  }
  return summarize_iv_data(std::move(Z), std::move(X), std::move(Y), dgp.beta_null);
}

SyntheticSample summarize_iv_data(std::vector<double> Z, std::vector<double> X, std::vector<double> Y,
                                  double beta_null) {
  const std::size_t n = Z.size();
  if (X.size() != n || Y.size() != n) throw Error(ErrorCode::kDomain, "Z, X and Y must have equal length");
  if (n < 3) throw Error(ErrorCode::kDomain, "need at least 3 observations");

  auto demean = [n](std::vector<double>& x) {
    double m = 0.0;
    for (double xi : x) m += xi;
    m /= static_cast<double>(n);
    for (double& xi : x) xi -= m;
  };
  demean(Z);
  demean(X);
  demean(Y);

  double szz = 0.0, szx = 0.0, szy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    szz += Z[i] * Z[i];
    szx += Z[i] * X[i];
    szy += Z[i] * Y[i];
  }
  if (szx == 0.0) throw Error(ErrorCode::kDegenerateSample, "sample first-stage coefficient is zero");

  const double pi_hat = szx / szz;
  const double gamma_hat = szy / szz;
  const double beta_hat = szy / szx;
  const double b0 = beta_null;

  // Score sums for HC0 variances.
  double s_vv = 0.0, s_ww = 0.0, s_vw = 0.0, s_uu = 0.0, s_aa = 0.0, s_av = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z2 = Z[i] * Z[i];
    const double v = X[i] - pi_hat * Z[i];
    const double w = Y[i] - gamma_hat * Z[i];
    const double u = Y[i] - beta_hat * X[i];
    const double a = (Y[i] - b0 * X[i]) - (gamma_hat - b0 * pi_hat) * Z[i];
    s_vv += z2 * v * v;
    s_ww += z2 * w * w;
    s_vw += z2 * v * w;
    s_uu += z2 * u * u;
    s_aa += z2 * a * a;
    s_av += z2 * a * v;
  }
  const double szz2 = szz * szz;

  SyntheticSample out;
  IVSummary& sum = out.summary;
  sum.beta_iv_hat = beta_hat;
  sum.var_beta = s_uu / (szx * szx);
  sum.pi_hat = pi_hat;
  sum.var_pi = s_vv / szz2;
  sum.var_rf = s_ww / szz2;
  sum.cov_rf_fs = s_vw / szz2;
  sum.beta_null = b0;

  CoreStats& d = out.direct;
  const double var_ar = s_aa / szz2;
  d.t = (beta_hat - b0) / std::sqrt(sum.var_beta);
  d.f = pi_hat / std::sqrt(sum.var_pi);
  d.F = d.f * d.f;
  d.t_ar = (gamma_hat - b0 * pi_hat) / std::sqrt(var_ar);
  d.rho_hat = (s_av / szz2) / std::sqrt(var_ar * sum.var_pi);
  return out;
}

}  // namespace ivtf
