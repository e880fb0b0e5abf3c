#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"
#include "ivtf/kernels/rejection_count.hpp"
#include "ivtf/mc_oracle.hpp"
#include "ivtf/size_engine.hpp"
#include "ivtf/statistics.hpp"
#include "ivtf/worst_case.hpp"
#include "support/gen.hpp"

using namespace ivtf;
namespace k = ivtf::kernels;

namespace {

const double kQ05 = chi2_1_quantile(0.05);
constexpr double kInf = std::numeric_limits<double>::infinity();

double corr(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct RandomBatch {
  std::vector<double> t_ar, f, crit;
};

RandomBatch random_batch(testgen::Gen& g, std::size_t n, double rho) {
  RandomBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    double f = g.normal(g.uniform(-3, 8), 1.0);
    double t = g.normal(0.0, 2.0);
    switch (g.integer(0, 9)) {
      case 0: f = 0.0; break;
      case 1: t = rho * f; break;  // D = 0 on the ridge
      case 2: t = 0.0; break;
      default: break;
    }
    b.f.push_back(f);
    b.t_ar.push_back(t);
    b.crit.push_back(g.coin(0.1) ? kInf : g.uniform(3.0, 30.0));
  }
  return b;
}

// Independent count through the t^2 identity, skipping near-ties and D = 0.
std::uint64_t oracle_count(const RandomBatch& rb, double rho, k::Rule rule, double crit, double fbar) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < rb.f.size(); ++i) {
    const double t_ar = rb.t_ar[i], f = rb.f[i];
    const double F = f * f;
    const double c = rule == k::Rule::kTsqPerDraw ? rb.crit[i] : crit;
    bool use_ar = rule == k::Rule::kAr || (rule == k::Rule::kHybrid && !(F > fbar));
    if (use_ar) {
      n += t_ar * t_ar > c;
      continue;
    }
    if (rule == k::Rule::kTsq && fbar >= 0.0 && !(F > fbar)) continue;
    const double d = (t_ar - rho * f) * (t_ar - rho * f) + (1 - rho * rho) * F;
    if (d == 0.0 || f == 0.0) continue;
    n += t_squared_identity(t_ar, f, rho) > c;
  }
  return n;
}

bool near_tie(const RandomBatch& rb, std::size_t i, double rho, double c) {
  const double f = rb.f[i], t_ar = rb.t_ar[i];
  const double d = (t_ar - rho * f) * (t_ar - rho * f) + (1 - rho * rho) * f * f;
  if (d == 0.0) return true;
  return std::abs(t_ar * t_ar * f * f - c * d) <= 1e-9 * (t_ar * t_ar * f * f + c * d);
}

}  // namespace

TEST_CASE("scalar and AVX2 kernels count identically") {
  testgen::Gen g(101);
  const k::Rule rules[] = {k::Rule::kTsq, k::Rule::kHybrid, k::Rule::kAr, k::Rule::kTsqPerDraw};
  for (int rep = 0; rep < 400; ++rep) {
    const double rho = std::array{-1.0, 1.0, 0.0, g.uniform(-1, 1)}[g.integer(0, 3)];
    const std::size_t n = rep < 100 ? static_cast<std::size_t>(rep % 37) : static_cast<std::size_t>(g.integer(1, 3000));
    const RandomBatch rb = random_batch(g, n, rho);
    for (k::Rule rule : rules) {
      k::Batch b;
      b.t_ar = rb.t_ar.data();
      b.f = rb.f.data();
      b.crit_per_draw = rb.crit.data();
      b.n = n;
      b.rho = rho;
      b.crit = g.coin(0.05) ? kInf : g.uniform(2.0, 20.0);
      b.f_threshold = g.coin(0.3) ? -1.0 : g.uniform(0.0, 40.0);
      b.rule = rule;
      const std::uint64_t scalar = k::count_rejections_scalar(b);
      CHECK(k::count_rejections(b) == scalar);
      if (k::avx2_available()) {
        CAPTURE(rep);
        CHECK(k::count_rejections_avx2(b) == scalar);
      }
    }
  }
}

TEST_CASE("kernel counts agree with the t^2 identity away from ties") {
  testgen::Gen g(7);
  for (int rep = 0; rep < 100; ++rep) {
    const double rho = g.uniform(-0.99, 0.99);
    RandomBatch rb = random_batch(g, 2000, rho);
    const double crit = g.uniform(2.0, 20.0);
    const double fbar = g.uniform(0.0, 30.0);
    // drop near-ties so both sides see the same comparisons
    RandomBatch clean;
    for (std::size_t i = 0; i < rb.f.size(); ++i) {
      const double c = std::isinf(rb.crit[i]) ? crit : rb.crit[i];
      if (near_tie(rb, i, rho, crit) || near_tie(rb, i, rho, c)) continue;
      clean.f.push_back(rb.f[i]);
      clean.t_ar.push_back(rb.t_ar[i]);
      clean.crit.push_back(rb.crit[i]);
    }
    for (k::Rule rule : {k::Rule::kTsq, k::Rule::kHybrid, k::Rule::kAr, k::Rule::kTsqPerDraw}) {
      k::Batch b{clean.t_ar.data(), clean.f.data(), clean.crit.data(), clean.f.size(), rho, crit, fbar, rule};
      CHECK(k::count_rejections(b) == oracle_count(clean, rho, rule, crit, fbar));
    }
  }
}

TEST_CASE("kernel edge cases") {
  const double t_ar[] = {0.0, 1.0, -2.0, 3.0, 0.0};
  const double f[] = {0.0, 1.0, -2.0, 5.0, 4.0};
  const double crit[] = {kInf, kInf, 1.0, 4.0, 1.0};
  k::Batch b{t_ar, f, crit, 5, 1.0, 1.0, -1.0, k::Rule::kTsqPerDraw};
  // infinite crit never rejects; D = 0 with t_ar != 0 is an unbounded t
  // and rejects; t_ar = f = 0 does not
  CHECK(k::count_rejections_scalar(b) == 2);
  b.rule = k::Rule::kAr;
  b.crit = 4.0;
  CHECK(k::count_rejections_scalar(b) == 1);
  b.n = 0;
  CHECK(k::count_rejections_scalar(b) == 0);
  CHECK(k::count_rejections(b) == 0);
}

TEST_CASE("draws are deterministic and exact on the ridge") {
  std::vector<double> t1(kMcBatch), f1(kMcBatch), t2(kMcBatch), f2(kMcBatch);
  draw_null_pairs(42, 3, {0.4, 2.0}, t1.data(), f1.data(), kMcBatch);
  draw_null_pairs(42, 3, {0.4, 2.0}, t2.data(), f2.data(), kMcBatch);
  CHECK(t1 == t2);
  CHECK(f1 == f2);
  draw_null_pairs(42, 4, {0.4, 2.0}, t2.data(), f2.data(), kMcBatch);
  CHECK(f1 != f2);

  for (double rho : {1.0, -1.0}) {
    const double f0 = 3.7;
    draw_null_pairs(9, 0, {rho, f0}, t1.data(), f1.data(), kMcBatch);
    bool exact = true;
    for (std::size_t i = 0; i < kMcBatch; ++i) exact = exact && t1[i] == rho * (f1[i] - f0);
    CHECK(exact);
  }

  draw_null_pairs(5, 0, {0.6, 1.5}, t1.data(), f1.data(), kMcBatch);
  const double n = static_cast<double>(kMcBatch);
  const double mean_f = std::accumulate(f1.begin(), f1.end(), 0.0) / n;
  CHECK(std::abs(mean_f - 1.5) < 0.02);
  std::vector<double> centred(f1);
  for (double& x : centred) x -= 1.5;
  CHECK(corr(t1, centred) == doctest::Approx(0.6).epsilon(0.02));
}

TEST_CASE("substreams are uncorrelated") {
  std::vector<double> a, b;
  std::vector<double> t(4096), f(4096);
  for (std::uint64_t i = 0; i < 400; ++i) {
    draw_null_pairs(77, 2 * i, {0.0, 0.0}, t.data(), f.data(), t.size());
    a.push_back(std::accumulate(f.begin(), f.end(), 0.0));
    draw_null_pairs(77, 2 * i + 1, {0.0, 0.0}, t.data(), f.data(), t.size());
    b.push_back(std::accumulate(f.begin(), f.end(), 0.0));
  }
  // |r| under independence has sd 0.05
  CHECK(std::abs(corr(a, b)) < 0.2);
  CHECK(substream_seed(1, 0) != substream_seed(1, 1));
  CHECK(substream_seed(1, 0) != substream_seed(2, 0));
}

TEST_CASE("mc_rejection is reproducible and independent across seeds") {
  const Procedure p = ThresholdTF{kQ05, 10.0};
  McConfig cfg{200'000, 12345, {0.8, 2.0}};
  const McEstimate a = mc_rejection(p, cfg);
  const McEstimate b = mc_rejection(p, cfg);
  CHECK(a.rejections == b.rejections);
  CHECK(a.estimate == b.estimate);
  CHECK(a.n_draws == 200'000);
  CHECK(a.mc_se == doctest::Approx(std::sqrt(a.estimate * (1 - a.estimate) / 2e5)));

  std::vector<double> x, y;
  for (std::uint64_t s = 0; s < 60; ++s) {
    x.push_back(mc_rejection(p, {10'000, 2 * s, {0.5, 1.0}}).estimate);
    y.push_back(mc_rejection(p, {10'000, 2 * s + 1, {0.5, 1.0}}).estimate);
  }
  CHECK(std::abs(corr(x, y)) < 0.4);
}

TEST_CASE("AR is exact and the 10 / 1.96 threshold peaks at 0.113") {
  for (double rho : {0.0, 0.5, 0.95, 1.0}) {
    for (double f0 : {0.0, 2.0, 12.0}) {
      const McEstimate e = mc_rejection(PureAR{kQ05}, {1'000'000, 3, {rho, f0}});
      CAPTURE(rho);
      CAPTURE(f0);
      CHECK(std::abs(e.estimate - 0.05) <= 3 * e.mc_se);
    }
  }
  const double fbar = 10.0;
  const double f0_star = fbar / (std::sqrt(fbar) + 1.96);
  const McEstimate e = mc_rejection(ThresholdTF{1.96 * 1.96, fbar}, {1'000'000, 4, {1.0, f0_star}});
  CHECK(std::abs(e.estimate - 0.113) <= 3 * e.mc_se + 5e-4);
  CHECK(std::abs(e.estimate - local_max_size(fbar, 1.96 * 1.96)) <= 3 * e.mc_se);
}

TEST_CASE("monte carlo agrees with quadrature") {
  auto cvf = testgen::cvf05();
  const Procedure procs[] = {ConventionalT{kQ05}, ThresholdTF{kQ05, 10.0}, HybridAR{kQ05, 10.0}, PureAR{kQ05},
                             TFProcedure{cvf}};
  std::uint64_t seed = 1000;
  for (const Procedure& p : procs) {
    for (double rho : {0.0, 0.8, 1.0}) {
      for (double f0 : {0.5, 3.0, 11.9}) {
        const McEstimate e = mc_rejection(p, {200'000, seed++, {rho, f0}});
        const double exact = rejection_prob(p, {rho, f0}, 1e-8).prob;
        CAPTURE(describe(p));
        CAPTURE(rho);
        CAPTURE(f0);
        CHECK(std::abs(e.estimate - exact) <= 4 * std::max(e.mc_se, 1e-4));
      }
    }
  }
}

TEST_CASE("mc_rejection argument checks") {
  try {
    mc_rejection(PureAR{kQ05}, {9'999, 1, {0.0, 1.0}});
    FAIL("accepted too few draws");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
  CHECK_THROWS_AS(mc_rejection(PureAR{kQ05}, {10'000, 1, {1.5, 1.0}}), Error);
  CHECK_THROWS_AS(mc_rejection(ThresholdTF{-1.0, 10.0}, {10'000, 1, {0.0, 1.0}}), Error);
  CHECK_NOTHROW(mc_rejection(PureAR{kQ05}, {10'000, 1, {-1.0, 1.0}}));
}

TEST_CASE("synthetic datasets satisfy the t identity") {
  testgen::Gen g(2024);
  for (int i = 0; i < 300; ++i) {
    SyntheticDGP dgp;
    dgp.n_obs = static_cast<std::size_t>(g.integer(50, 800));
    dgp.beta = g.normal(0, 2);
    dgp.pi = g.uniform(-1, 1);
    dgp.rho_uv = g.uniform(-0.99, 0.99);
    dgp.error_scale = g.log_uniform(0.1, 10);
    dgp.beta_null = g.normal(0, 2);
    const SyntheticSample s = simulate_iv_dataset(dgp, static_cast<std::uint64_t>(i));
    const CoreStats c = core_stats_from_summary(s.summary);
    CAPTURE(i);
    CHECK(c.t == doctest::Approx(s.direct.t).epsilon(1e-10));
    CHECK(c.f == doctest::Approx(s.direct.f).epsilon(1e-10));
    CHECK(c.t_ar == doctest::Approx(s.direct.t_ar).epsilon(1e-10));
    CHECK(c.rho_hat == doctest::Approx(s.direct.rho_hat).epsilon(1e-10));
    CHECK(std::abs(s.direct.rho_hat) <= 1.0);
  }
}

TEST_CASE("simulate_iv_dataset behaviour") {
  SyntheticDGP dgp;
  const SyntheticSample a = simulate_iv_dataset(dgp, 8);
  const SyntheticSample b = simulate_iv_dataset(dgp, 8);
  CHECK(a.direct.t == b.direct.t);
  CHECK(a.summary.pi_hat == doctest::Approx(1.0).epsilon(0.1));

  dgp.n_obs = 49;
  CHECK_THROWS_AS(simulate_iv_dataset(dgp, 1), Error);
  dgp.n_obs = 100;
  dgp.rho_uv = 1.5;
  CHECK_THROWS_AS(simulate_iv_dataset(dgp, 1), Error);

  // X constant: the first-stage coefficient is exactly zero
  try {
    summarize_iv_data({1, 2, 3, 4}, {5, 5, 5, 5}, {1, 0, 2, 1}, 0.0);
    FAIL("degenerate first stage accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateSample);
  }
  CHECK_THROWS_AS(summarize_iv_data({1, 2, 3}, {1, 2}, {1, 2, 3}, 0.0), Error);
  // hand-checked: pi_hat = 2, beta_hat = 1.5
  const SyntheticSample h = summarize_iv_data({-1, 0, 1, 0}, {-2, 0.5, 2, -0.5}, {-3, 1, 3, -1}, 0.0);
  CHECK(h.summary.pi_hat == doctest::Approx(2.0));
  CHECK(h.summary.beta_iv_hat == doctest::Approx(1.5));
}

TEST_CASE("strong instrument at the truth: t tracks t_AR") {
  SyntheticDGP dgp;
  dgp.n_obs = 10'000;
  dgp.pi = 0.5;
  dgp.rho_uv = 0.5;
  std::vector<double> gaps;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const SyntheticSample x = simulate_iv_dataset(dgp, s);
    CHECK(x.direct.f > 40.0);
    gaps.push_back(std::abs(x.direct.t - x.direct.t_ar) / std::max(1.0, std::abs(x.direct.t_ar)));
  }
  std::sort(gaps.begin(), gaps.end());
  CHECK(gaps[gaps.size() / 2] < 0.03);
  CHECK(gaps.back() < 0.15);
}

TEST_CASE("replications: conventional t has size near 5% with exogenous errors") {
  SyntheticDGP dgp;
  dgp.n_obs = 1000;
  dgp.beta = 0.7;
  dgp.beta_null = 0.7;
  dgp.rho_uv = 0.0;
  int rejections = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    const SyntheticSample s = simulate_iv_dataset(dgp, 50'000 + static_cast<std::uint64_t>(r));
    rejections += s.direct.t * s.direct.t > kQ05;
  }
  const double rate = static_cast<double>(rejections) / reps;
  CHECK(std::abs(rate - 0.05) <= 3 * std::sqrt(0.05 * 0.95 / reps));
}
