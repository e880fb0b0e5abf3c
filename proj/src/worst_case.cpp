#include "ivtf/worst_case.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <type_traits>

#include <fmt/format.h>

#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"
#include "ivtf/size_engine.hpp"
#include "parallel.hpp"

namespace ivtf {

namespace {

constexpr double kFbarLo = 1.0;
constexpr double kFbarHi = 1e6;
constexpr double kCritHi = 400.0;
// Slack for certifying a solved constant against the global search: the
// solution sits exactly on alpha, so the grid search can only tie it up to
// quadrature noise.
constexpr double kCertifySlack = 1e-6;
constexpr double kGridTol = 1e-9;

// x in [lo, hi] with h(x) = 0 for h decreasing; h(lo) > 0 >= h(hi) assumed.
template <class H>
double solve_decreasing(H&& h, double lo, double hi, int bits = 44) {
  const double h_lo = h(lo);
  const double h_hi = h(hi);
  if (h_lo <= 0.0) return lo;
  if (h_hi >= 0.0) return hi;
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(h, lo, hi, h_lo, h_hi,
                                                  boost::math::tools::eps_tolerance<double>(bits), iters);
  return 0.5 * (a + b);
}

// Maximizer of g on [lo, hi] by Brent's method.
template <class G>
std::pair<double, double> brent_max(G&& g, double lo, double hi) {
  if (!(hi > lo)) return {lo, g(lo)};
  auto neg = [&](double x) { return -g(x); };
  auto [x, fx] = boost::math::tools::brent_find_minima(neg, lo, hi, 30);
  return {x, -fx};
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = (n == 1) ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

double eq7_threshold(double crit, double fbar, double f0) {
  return rejection_prob_rho1(ThresholdTF{crit, fbar}, f0);
}

}  // namespace

double local_max_f0(double f_threshold, double crit) noexcept {
  const double rf = std::sqrt(f_threshold);
  return f_threshold / (rf + std::sqrt(crit));
}

double local_max_size(double f_threshold, double crit) {
  if (!(f_threshold > 0.0) || !(crit > 0.0)) throw Error(ErrorCode::kDomain, "needs Fbar > 0 and crit > 0");
  const double rf = std::sqrt(f_threshold);
  const double rc = std::sqrt(crit);
  const double den = rf + rc;
  return std_normal_sf(rf * rc / den) + std_normal_cdf((-rf * rc - 2.0 * f_threshold) / den);
}

RidgeMax threshold_ridge_max(double f_threshold, double crit) {
  if (!(f_threshold > 0.0) || !(crit > 0.0)) throw Error(ErrorCode::kDomain, "needs Fbar > 0 and crit > 0");
  const double hi = std::max(40.0, 3.0 * std::sqrt(f_threshold) + 20.0);
  constexpr int kScan = 4000;
  const double h = hi / kScan;
  std::vector<double> vals(kScan + 1);
  for (int i = 0; i <= kScan; ++i) vals[i] = eq7_threshold(crit, f_threshold, i * h);
  RidgeMax best{eq7_threshold(crit, f_threshold, local_max_f0(f_threshold, crit)),
                local_max_f0(f_threshold, crit)};
  for (int i = 0; i <= kScan; ++i) {
    const bool peak = (i == 0 || vals[i] >= vals[i - 1]) && (i == kScan || vals[i] >= vals[i + 1]);
    if (!peak) continue;
    auto [x, fx] = brent_max([&](double f0) { return eq7_threshold(crit, f_threshold, f0); },
                             std::max(0.0, (i - 1) * h), std::min(hi, (i + 1) * h));
    if (vals[i] > fx) {
      x = i * h;
      fx = vals[i];
    }
    if (fx > best.prob) best = {fx, x};
  }
  return best;
}

double default_f0_max(const Procedure& proc) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ThresholdTF> || std::is_same_v<T, HybridAR>) {
          return std::max(20.0, 2.0 * std::sqrt(p.f_threshold) + 10.0);
        } else if constexpr (std::is_same_v<T, TFProcedure>) {
          return std::max(20.0, p.cvf->flat_from() + 10.0);
        } else {
          return 20.0;
        }
      },
      proc);
}

WorstCase worst_case_size(const Procedure& proc, double tol, const WorstCaseOptions& opts) {
  validate(proc);
  if (!(tol > 1e-12 && tol <= 1e-4)) throw Error(ErrorCode::kDomain, "tol must lie in (1e-12, 1e-4]");
  if (opts.n_rho < 2 || opts.n_f0 < 2) throw Error(ErrorCode::kDomain, "grid needs >= 2 points per axis");
  const double f0_max = opts.f0_max > 0.0 ? opts.f0_max : default_f0_max(proc);
  const std::vector<double> rhos = linspace(0.0, 1.0, opts.n_rho);
  const std::vector<double> f0s = linspace(0.0, f0_max, opts.n_f0);
  auto size_at = [&](double rho, double f0) {
    return rejection_prob(proc, {std::clamp(rho, 0.0, 1.0), std::clamp(f0, 0.0, f0_max)}, tol).prob;
  };

  const std::size_t nr = rhos.size();
  const std::size_t nf = f0s.size();
  std::vector<double> grid(nr * nf);
  detail::parallel_for(nr, [&](std::size_t i) {
    for (std::size_t j = 0; j < nf; ++j) grid[i * nf + j] = size_at(rhos[i], f0s[j]);
  });

  struct Cand {
    double prob, rho, f0;
  };
  std::vector<Cand> starts;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nf; ++j) {
      const double v = grid[i * nf + j];
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di) {
        for (int dj = -1; dj <= 1 && peak; ++dj) {
          const auto ii = static_cast<std::ptrdiff_t>(i) + di;
          const auto jj = static_cast<std::ptrdiff_t>(j) + dj;
          if ((di || dj) && ii >= 0 && jj >= 0 && ii < static_cast<std::ptrdiff_t>(nr) &&
              jj < static_cast<std::ptrdiff_t>(nf) && grid[ii * nf + jj] > v) {
            peak = false;
          }
        }
      }
      if (peak) starts.push_back({v, rhos[i], f0s[j]});
    }
  }

  // Exact ridge: dense scan plus the analytic stationary point.
  constexpr int kRidgeScan = 4000;
  Cand ridge{-1.0, 1.0, 0.0};
  for (int k = 0; k <= kRidgeScan; ++k) {
    const double f0 = f0_max * k / kRidgeScan;
    const double v = size_at(1.0, f0);
    if (v > ridge.prob) ridge = {v, 1.0, f0};
  }
  if (const auto* t = std::get_if<ThresholdTF>(&proc)) {
    const double fs = local_max_f0(t->f_threshold, t->crit);
    if (fs <= f0_max) {
      const double v = size_at(1.0, fs);
      if (v >= ridge.prob) ridge = {v, 1.0, fs};
    }
  }
  {
    const double h = f0_max / kRidgeScan;
    auto [x, fx] = brent_max([&](double f0) { return size_at(1.0, f0); }, std::max(0.0, ridge.f0 - h),
                             std::min(f0_max, ridge.f0 + h));
    if (fx > ridge.prob) ridge = {fx, 1.0, x};
  }

  std::sort(starts.begin(), starts.end(), [](const Cand& a, const Cand& b) { return a.prob > b.prob; });
  if (starts.size() > static_cast<std::size_t>(opts.refine_starts)) starts.resize(opts.refine_starts);

  Cand best = ridge;
  const double hr = 1.0 / (opts.n_rho - 1);
  const double hf = f0_max / (opts.n_f0 - 1);
  for (Cand c : starts) {
    if (c.prob > best.prob) best = c;
    for (int round = 0; round < 3; ++round) {
      auto [f0, pf] = brent_max([&](double x) { return size_at(c.rho, x); }, std::max(0.0, c.f0 - hf),
                                std::min(f0_max, c.f0 + hf));
      if (pf > c.prob) c = {pf, c.rho, f0};
      auto [rho, pr] = brent_max([&](double x) { return size_at(x, c.f0); }, std::max(0.0, c.rho - hr),
                                 std::min(1.0, c.rho + hr));
      if (pr > c.prob) c = {pr, rho, c.f0};
      const double edge = size_at(1.0, c.f0);
      if (c.rho + hr >= 1.0 && edge > c.prob) c = {edge, 1.0, c.f0};
    }
    if (c.prob > best.prob) best = c;
  }
  return {best.prob, best.rho, best.f0, tol};
}

std::optional<double> solve_threshold_F(double crit, double alpha) {
  if (!(crit > 0.0)) throw Error(ErrorCode::kDomain, "crit must be > 0");
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::kDomain, "alpha must lie in (0, 0.5)");
  // Work in log Fbar: the local-max formula is smooth and monotone there.
  auto local = [&](double lf) { return local_max_size(std::exp(lf), crit) - alpha; };
  const double llo = std::log(kFbarLo);
  const double lhi = std::log(kFbarHi);
  if (local(lhi) > 0.0) return std::nullopt;
  double lf = solve_decreasing(local, llo, lhi);

  auto ridge = [&](double l) { return threshold_ridge_max(std::exp(l), crit).prob - alpha; };
  if (ridge(lf) > 0.0) {
    if (ridge(lhi) > 0.0) return std::nullopt;
    lf = solve_decreasing(ridge, lf, lhi);
  }

  auto global = [&](double l) { return worst_case_size(ThresholdTF{crit, std::exp(l)}).max_prob - alpha; };
  if (global(lf) > kCertifySlack) {
    if (global(lhi) > kCertifySlack) return std::nullopt;
    lf = solve_decreasing([&](double l) { return global(l) - kCertifySlack; }, lf, lhi, 30);
  }
  return std::exp(lf);
}

double solve_critical_value(double f_threshold, double alpha) {
  if (!(f_threshold > 0.0)) throw Error(ErrorCode::kDomain, "f_threshold must be > 0");
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::kDomain, "alpha must lie in (0, 0.5)");
  const double q = chi2_1_quantile(alpha);
  auto local = [&](double c) { return local_max_size(f_threshold, c) - alpha; };
  if (local(kCritHi) > 0.0) {
    throw Error(ErrorCode::kUnattainableLevel,
                fmt::format("no critical value up to {} reaches alpha = {} at Fbar = {}", kCritHi, alpha, f_threshold));
  }
  double c = solve_decreasing(local, q, kCritHi);
  auto global = [&](double x) { return worst_case_size(ThresholdTF{x, f_threshold}).max_prob - alpha; };
  if (global(c) > kCertifySlack) {
    if (global(kCritHi) > kCertifySlack) {
      throw Error(ErrorCode::kUnattainableLevel,
                  fmt::format("worst-case size stays above alpha = {} for crit up to {}", alpha, kCritHi));
    }
    c = solve_decreasing([&](double x) { return global(x) - kCertifySlack; }, c, kCritHi, 30);
  }
  return c;
}

ValidityRegion validity_region(double crit, double alpha, const GridSpec& g) {
  if (!(crit > 0.0)) throw Error(ErrorCode::kDomain, "crit must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kDomain, "alpha must lie in (0, 1)");
  if (g.n_rho < 2 || g.n_ef < 2 || !(g.ef_min >= 1.0) || !(g.ef_max > g.ef_min)) {
    throw Error(ErrorCode::kDomain, "bad validity grid");
  }
  const Procedure proc = ConventionalT{crit};
  auto size_at = [&](double rho, double ef) {
    return rejection_prob(proc, NuisancePoint::from_ef(std::clamp(rho, 0.0, 1.0), std::max(ef, 1.0)), kGridTol)
        .prob;
  };

  ValidityRegion out;
  out.alpha = alpha;
  out.crit = crit;
  out.certified_tol = kGridTol;
  out.rho = linspace(0.0, 1.0, g.n_rho);
  out.ef = linspace(g.ef_min, g.ef_max, g.n_ef);
  const std::size_t nr = out.rho.size();
  const std::size_t ne = out.ef.size();
  out.size.assign(ne, std::vector<double>(nr));
  out.valid.assign(ne, std::vector<bool>(nr));
  detail::parallel_for(ne, [&](std::size_t j) {
    for (std::size_t i = 0; i < nr; ++i) out.size[j][i] = size_at(out.rho[i], out.ef[j]);
  });
  for (std::size_t j = 0; j < ne; ++j) {
    for (std::size_t i = 0; i < nr; ++i) out.valid[j][i] = out.size[j][i] <= alpha;
  }

  const double hr = out.rho[1] - out.rho[0];
  const double he = out.ef[1] - out.ef[0];

  // Max over E[F] in range at fixed rho, refined around the best grid row.
  auto column_max = [&](double rho) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < ne; ++j) {
      const double v = size_at(rho, out.ef[j]);
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    const double lo = std::max(g.ef_min, out.ef[arg] - he);
    const double hi = std::min(g.ef_max, out.ef[arg] + he);
    return std::max(best, brent_max([&](double ef) { return size_at(rho, ef); }, lo, hi).second);
  };
  // Max over rho in [0, 1] at fixed E[F], including the rho = 1 edge.
  auto row_max = [&](double ef) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < nr; ++i) {
      const double v = size_at(out.rho[i], ef);
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    const double lo = std::max(0.0, out.rho[arg] - hr);
    const double hi = std::min(1.0, out.rho[arg] + hr);
    return std::max({best, brent_max([&](double r) { return size_at(r, ef); }, lo, hi).second, size_at(1.0, ef)});
  };

  // The grid can straddle a narrow peak, so the first failing column is
  // confirmed with the refined column maximum before bisecting.
  std::size_t first_bad_col = nr;
  for (std::size_t i = 0; i < nr && first_bad_col == nr; ++i) {
    for (std::size_t j = 0; j < ne; ++j) {
      if (!out.valid[j][i]) {
        first_bad_col = i;
        break;
      }
    }
  }
  while (first_bad_col > 0 && column_max(out.rho[first_bad_col - 1]) > alpha) --first_bad_col;
  if (first_bad_col == nr) {
    out.rho_bar = 1.0;
  } else if (first_bad_col == 0) {
    out.rho_bar = 0.0;
  } else {
    out.rho_bar = solve_decreasing([&](double r) { return alpha - column_max(r); }, out.rho[first_bad_col - 1],
                                   out.rho[first_bad_col], 40);
  }

  std::size_t lowest_good_row = ne;
  for (std::size_t j = ne; j-- > 0;) {
    if (std::all_of(out.valid[j].begin(), out.valid[j].end(), [](bool b) { return b; })) {
      lowest_good_row = j;
    } else {
      break;
    }
  }
  if (lowest_good_row == ne) {
    out.ef_bar = std::nullopt;
  } else if (lowest_good_row == 0) {
    out.ef_bar = out.ef[0];
  } else {
    out.ef_bar = solve_decreasing([&](double ef) { return row_max(ef) - alpha; }, out.ef[lowest_good_row - 1],
                                  out.ef[lowest_good_row], 40);
  }
  return out;
}

std::vector<NonexistenceRow> hybrid_nonexistence_certificate(double crit, const std::vector<double>& f_grid,
                                                             double alpha) {
  if (!(crit > 0.0)) throw Error(ErrorCode::kDomain, "crit must be > 0");
  const double rc = std::sqrt(crit);
  std::vector<NonexistenceRow> rows;
  rows.reserve(f_grid.size());
  for (double fbar : f_grid) {
    if (!(fbar >= 0.5 * crit)) throw Error(ErrorCode::kDomain, "Fbar must be >= crit / 2");
    const double rf = std::sqrt(fbar);
    NonexistenceRow r;
    r.f_threshold = fbar;
    r.f0_star = local_max_f0(fbar, crit);
    r.bound = std_normal_sf(rc * rf / (rf + rc)) + std_normal_cdf(-rc);
    r.exceeds_alpha = r.bound > alpha;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ivtf
