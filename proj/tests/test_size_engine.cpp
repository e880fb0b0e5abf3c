#include <doctest.h>

#include <cmath>
#include <vector>

#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"
#include "ivtf/size_engine.hpp"
#include "ivtf/worst_case.hpp"
#include "support/gen.hpp"

using namespace ivtf;

namespace {

const double kC = 1.96 * 1.96;

// Midpoint rule over (t_ar, f) with pointwise membership: slow and simple.
template <class Reject>
double brute_force(double rho, double f0, Reject reject, double h = 0.004) {
  const double s = std::sqrt(1 - rho * rho);
  double total = 0.0;
  for (double f = f0 - 8.0 + h / 2; f < f0 + 8.0; f += h) {
    const double pf = std::exp(-0.5 * (f - f0) * (f - f0));
    for (double z = -8.0 + h / 2; z < 8.0; z += h) {
      const double ta = rho * (f - f0) + s * z;
      if (reject(ta, f)) total += pf * std::exp(-0.5 * z * z);
    }
  }
  return total * h * h / (2 * M_PI);
}

double t2_of(double ta, double f, double rho) {
  const double d = (ta - rho * f) * (ta - rho * f) + (1 - rho * rho) * f * f;
  return ta * ta * f * f / d;
}

}  // namespace

TEST_CASE("conventional test approaches nominal with a strong instrument") {
  // With rho = 0, t^2 < t_ar^2, so the rate sits just under 0.05:
  // about 0.05 - 2 phi(1.96) 1.96 c / (2 f0^2).
  const double at30 = rejection_prob(ConventionalT{kC}, {0.0, 30.0}).prob;
  const double bf = brute_force(0.0, 30.0, [](double ta, double f) { return t2_of(ta, f, 0.0) > kC; });
  CHECK(std::abs(at30 - bf) < 3e-4);
  CHECK(at30 == doctest::Approx(0.05 - 2 * std::exp(-0.5 * kC) / std::sqrt(2 * M_PI) * 1.96 * kC / 1800.0).epsilon(1e-4 / 0.05));
  CHECK(std::abs(rejection_prob(ConventionalT{kC}, {0.0, 100.0}).prob - 0.05) < 2e-4);
}

TEST_CASE("threshold rule at the ridge peak") {
  const double f0 = 10.0 / (std::sqrt(10.0) + 1.96);
  const double expect = 1 - testgen::phi_oracle(1.96 * std::sqrt(10.0) / (1.96 + std::sqrt(10.0))) +
                        testgen::phi_oracle((-20.0 - 1.96 * std::sqrt(10.0)) / (1.96 + std::sqrt(10.0)));
  CHECK(rejection_prob(ThresholdTF{kC, 10.0}, {1.0, f0}).prob == doctest::Approx(expect).epsilon(1e-12));
  CHECK(rejection_prob_rho1(ThresholdTF{kC, 10.0}, f0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(expect - 0.113) < 5e-4);
}

TEST_CASE("pure AR is exact everywhere") {
  testgen::Gen g(41);
  for (int i = 0; i < 200; ++i) {
    const NuisancePoint p{g.uniform(-1, 1), g.uniform(0, 30)};
    CHECK(std::abs(rejection_prob(PureAR{kC}, p).prob - 2 * testgen::phi_oracle(-1.96)) < 1e-8);
  }
  CHECK(std::abs(rejection_prob(PureAR{chi2_1_quantile(0.05)}, {0.9, 0.0}).prob - 0.05) < 1e-12);
}

TEST_CASE("conventional test near rho = 1 with almost no first stage") {
  // The exact value on the ridge is 0.7536; only much smaller f0 pushes it
  // past 0.95.
  const double at_005 = rejection_prob(ConventionalT{kC}, {1.0, 0.05}).prob;
  CHECK(at_005 == doctest::Approx(0.7536).epsilon(1e-4 / 0.7536));
  CHECK(rejection_prob(ConventionalT{kC}, {1.0, 0.001}).prob > 0.95);
  CHECK(rejection_prob_rho1(ConventionalT{kC}, 0.0) == 1.0);
}

TEST_CASE("rho1 closed form at f0 = 0 with a threshold") {
  CHECK(rejection_prob_rho1(ThresholdTF{kC, 10.0}, 0.0) == doctest::Approx(2 * testgen::phi_oracle(-std::sqrt(10.0))).epsilon(1e-13));
  CHECK_THROWS_AS(rejection_prob_rho1(PureAR{kC}, 1.0), Error);
  CHECK_THROWS_AS(rejection_prob_rho1(ConventionalT{kC}, -1.0), Error);
}

TEST_CASE("quadrature approaches the rho = 1 closed form") {
  for (double f0 : {0.5, 1.9523, 5.0, 12.0}) {
    const double conv = rejection_prob_rho1(ConventionalT{kC}, f0);
    const double thr = rejection_prob_rho1(ThresholdTF{kC, 10.0}, f0);
    CHECK(std::abs(rejection_prob(ConventionalT{kC}, {1 - 1e-9, f0}).prob - conv) < 1e-5);
    CHECK(std::abs(rejection_prob(ThresholdTF{kC, 10.0}, {1 - 1e-9, f0}).prob - thr) < 1e-5);
    // just inside the quadrature route; the threshold corner moves with sqrt(1 - rho^2)
    CHECK(std::abs(rejection_prob(ConventionalT{kC}, {1 - 2e-6, f0}, 1e-9).prob - conv) < 1e-6);
    CHECK(std::abs(rejection_prob(ThresholdTF{kC, 10.0}, {1 - 2e-6, f0}, 1e-9).prob - thr) < 2.5e-4);
  }
}

TEST_CASE("quadrature agrees with brute-force integration") {
  struct Case {
    double rho, f0;
  };
  for (Case c : {Case{0.8, 2.0}, Case{0.3, 5.0}, Case{0.95, 11.9}}) {
    const double conv = brute_force(c.rho, c.f0, [&](double ta, double f) { return t2_of(ta, f, c.rho) > kC; });
    CHECK(std::abs(rejection_prob(ConventionalT{kC}, {c.rho, c.f0}).prob - conv) < 3e-4);
    const double thr = brute_force(c.rho, c.f0, [&](double ta, double f) { return f * f > 10.0 && t2_of(ta, f, c.rho) > kC; });
    CHECK(std::abs(rejection_prob(ThresholdTF{kC, 10.0}, {c.rho, c.f0}).prob - thr) < 3e-4);
    const double hyb = brute_force(c.rho, c.f0, [&](double ta, double f) {
      return f * f > 10.0 ? t2_of(ta, f, c.rho) > kC : ta * ta > kC;
    });
    CHECK(std::abs(rejection_prob(HybridAR{kC, 10.0}, {c.rho, c.f0}).prob - hyb) < 3e-4);
  }
}

TEST_CASE("tF quadrature agrees with brute-force integration") {
  const auto cvf = testgen::cvf05();
  for (double rho : {0.5, 0.9}) {
    const double f0 = 3.0;
    const double bf = brute_force(rho, f0, [&](double ta, double f) { return t2_of(ta, f, rho) > cvf->eval(f * f); }, 0.005);
    CHECK(std::abs(rejection_prob(TFProcedure{cvf}, {rho, f0}).prob - bf) < 4e-4);
  }
}

TEST_CASE("mirror symmetry in rho and f0") {
  testgen::Gen g(42);
  for (int i = 0; i < 40; ++i) {
    const double rho = g.uniform(0, 0.999), f0 = g.uniform(0, 15);
    for (const Procedure& p : {Procedure{ConventionalT{kC}}, Procedure{ThresholdTF{kC, 10}}, Procedure{HybridAR{kC, 10}}}) {
      const double a = rejection_prob(p, {rho, f0}).prob;
      CHECK(std::abs(rejection_prob(p, {-rho, f0}).prob - a) <= 2e-8);
      CHECK(std::abs(rejection_prob(p, {rho, -f0}).prob - a) <= 2e-8);
    }
  }
}

TEST_CASE("hybrid rule rejects at least as often as the threshold rule") {
  testgen::Gen g(43);
  for (int i = 0; i < 200; ++i) {
    const double c = g.uniform(2.0, 12.0), fbar = g.log_uniform(c / 2, 500.0);
    const NuisancePoint p{g.uniform(0, 1), g.uniform(0, 30)};
    const double thr = rejection_prob(ThresholdTF{c, fbar}, p).prob;
    const double hyb = rejection_prob(HybridAR{c, fbar}, p).prob;
    CHECK(hyb >= thr - 2e-8);
  }
}

TEST_CASE("rejection probabilities are probabilities with certified error") {
  testgen::Gen g(44);
  const auto cvf = testgen::cvf05();
  for (int i = 0; i < 100; ++i) {
    const NuisancePoint p{g.uniform(-1, 1), g.uniform(0, 25)};
    for (const Procedure& proc : {Procedure{ConventionalT{kC}}, Procedure{ThresholdTF{kC, 50}}, Procedure{TFProcedure{cvf}}}) {
      const SizeResult r = rejection_prob(proc, p, 1e-8);
      CHECK(r.prob >= 0.0);
      CHECK(r.prob <= 1.0);
      CHECK(r.abs_err <= 1e-8);
    }
  }
}

TEST_CASE("hybrid extra term") {
  const double f0 = local_max_f0(10.0, kC);
  const double extra = hybrid_extra_term(10.0, kC, f0);
  const double printed = testgen::phi_oracle(-1.96) -
                         testgen::phi_oracle((-20.0 - 1.96 * std::sqrt(10.0)) / (std::sqrt(10.0) + 1.96));
  CHECK(extra == doctest::Approx(printed).epsilon(1e-12));
  CHECK(local_max_size(10.0, kC) + extra > 0.05);
  CHECK(std::abs(hybrid_extra_term(1e12, kC, local_max_f0(1e12, kC)) - testgen::phi_oracle(-1.96)) < 1e-5);
  const double edge = hybrid_extra_term(kC / 2, kC, local_max_f0(kC / 2, kC));
  CHECK(std::isfinite(edge));
  CHECK(edge >= 0.0);
  try {
    hybrid_extra_term(1.0, kC, 0.5);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDomain);
  }
}

TEST_CASE("rejection_prob argument checks") {
  CHECK_THROWS_AS(rejection_prob(ConventionalT{kC}, {0.5, 1.0}, 1e-13), Error);
  CHECK_THROWS_AS(rejection_prob(ConventionalT{kC}, {0.5, 1.0}, 1e-2), Error);
  CHECK_THROWS_AS(rejection_prob(ConventionalT{kC}, {1.5, 1.0}), Error);
  CHECK_THROWS_AS(rejection_prob(ConventionalT{-1.0}, {0.5, 1.0}), Error);
  CHECK_THROWS_AS(rejection_prob(TFProcedure{nullptr}, {0.5, 1.0}), Error);
}
