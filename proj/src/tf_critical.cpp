#include "ivtf/tf_critical.hpp"

#include <zlib.h>

#include <boost/math/tools/toms748_solve.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include <fmt/format.h>

#include "ivtf/error.hpp"
#include "ivtf/gaussian.hpp"

namespace ivtf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSolveLo = 0.3;
// An unpinned curve keeps knots up to here.
constexpr double kOpenEnd = 12.0;
constexpr int kCacheVersion = 1;

using Json = nlohmann::json;

// Knot k binds where the ridge acceptance boundary passes through
// (u_k, s_k): u (u - f0) = f0 s.
double binding_f0(double u, double s) { return u * u / (u + s); }

// Smallest v in [kSolveLo, cap] with g(v) <= 0, searching from `start`.
// g falls steeply to zero and then lies flat on a plateau just below it
// (larger values reject nothing new), so only the first crossing is
// meaningful. Returns +inf when g(cap) > 0 and NaN when g stays <= 0 all the
// way down to `floor`.
template <class G>
double solve_knot(G&& g, double start, double floor, double cap) {
  constexpr double kStep = 1.02;
  double v = std::clamp(start, floor, cap);
  double gv = g(v);
  double lo, hi, g_lo, g_hi;
  if (gv > 0.0) {
    lo = v;
    g_lo = gv;
    for (;;) {
      if (v >= cap) return kInf;
      v = std::min(v * kStep, cap);
      gv = g(v);
      if (gv <= 0.0) break;
      lo = v;
      g_lo = gv;
    }
    hi = v;
    g_hi = gv;
  } else {
    hi = v;
    g_hi = gv;
    for (;;) {
      if (v <= floor) return std::numeric_limits<double>::quiet_NaN();
      v = std::max(v / kStep, floor);
      gv = g(v);
      if (gv > 0.0) break;
      hi = v;
      g_hi = gv;
    }
    lo = v;
    g_lo = gv;
  }
  if (g_hi == 0.0) return hi;
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi,
                                                  boost::math::tools::eps_tolerance<double>(48), iters);
  return 0.5 * (a + b);
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::uint32_t knot_checksum(double alpha, double f_tilde, const Json& knots) {
  const std::string payload = Json{{"alpha", alpha}, {"f_tilde", finite_or_null(f_tilde)}, {"knots", knots}}.dump();
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

}  // namespace

std::vector<double> default_cvf_grid(double first, double last, double step) {
  if (!(step > 0.0) || !(last > first)) throw Error(ErrorCode::kDomain, "bad knot grid");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9));
  grid.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(first + static_cast<double>(i) * step);
  return grid;
}

CriticalValueFunction build_cvf(double alpha, const std::vector<double>& grid, const CvfBuildOptions& opts) {
  if (!(alpha > 0.0 && alpha <= 0.25)) throw Error(ErrorCode::kDomain, "alpha must lie in (0, 0.25]");
  const double q = chi2_1_quantile(alpha);
  const double sq = std::sqrt(q);
  if (grid.size() < 2 || !(grid.front() > sq)) {
    throw Error(ErrorCode::kDomain, "knot grid must start above sqrt(q) and hold >= 2 knots");
  }

  std::vector<CvfKnot> knots;
  knots.reserve(grid.size() + 1);
  knots.push_back({sq, kInf});
  for (double u : grid) {
    if (!(u > knots.back().sqrt_f)) throw Error(ErrorCode::kDomain, "knot grid must ascend");
    knots.push_back({u, kInf});
  }
  std::size_t n = knots.size();

  // Forward pass: everything beyond the current knot is taken as rejected,
  // which is exact once later knots are filled in below the boundary.
  for (std::size_t k = 1; k < n; ++k) {
    const std::span<const CvfKnot> head(knots.data(), k + 1);
    const double u = knots[k].sqrt_f;
    const double start = std::isinf(knots[k - 1].crit_sqrt) ? opts.cap : knots[k - 1].crit_sqrt;
    knots[k].crit_sqrt = solve_knot(
        [&](double v) {
          knots[k].crit_sqrt = v;
          return ridge_rejection_prob(head, binding_f0(u, v), RidgeTail::kRejectAll) - alpha;
        },
        start, kSolveLo, opts.cap);
    if (std::isnan(knots[k].crit_sqrt)) {
      throw Error(ErrorCode::kNonconvergence,
                  fmt::format("knot at sqrt(F) = {} has no root above {}", u, kSolveLo));
    }
  }

  // Fixed-point sweeps against the whole curve, over the knots that enter
  // c(F): up to the first one at or below sqrt(q). Further out the curve
  // flattens, turns back up toward sqrt(q) and stops binding on the ridge.
  std::size_t k_pin = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (knots[k].crit_sqrt <= sq) {
      k_pin = k;
      break;
    }
  }
  // Never reaches sqrt(q) (no finite single threshold exists either): keep
  // the well-determined head and let c(F) hold its last value.
  if (k_pin == 0) {
    while (knots.size() > 2 && knots[knots.size() - 2].sqrt_f >= kOpenEnd) knots.pop_back();
    n = knots.size();
    k_pin = n - 1;
  }
  const std::span<const CvfKnot> all(knots);
  double change = kInf;
  for (int sweep = 0; sweep < opts.max_sweeps && change > opts.sweep_tol; ++sweep) {
    change = 0.0;
    for (std::size_t k = 1; k <= k_pin; ++k) {
      const double old = knots[k].crit_sqrt;
      if (std::isinf(old)) continue;
      const double u = knots[k].sqrt_f;
      double next = solve_knot(
          [&](double v) {
            knots[k].crit_sqrt = v;
            return ridge_rejection_prob(all, binding_f0(u, v)) - alpha;
          },
          old, std::max(kSolveLo, 0.9 * old), opts.cap);
      // No crossing: the knot does not bind on the full curve.
      if (std::isnan(next) || std::isinf(next)) next = old;
      knots[k].crit_sqrt = next;
      change = std::max(change, std::abs(next - old));
    }
  }
  if (opts.max_sweeps > 0 && change > opts.sweep_tol) {
    throw Error(ErrorCode::kNonconvergence,
                fmt::format("knot sweep stalled with max change {:.3g}", change));
  }

  // F-tilde: first downward crossing of sqrt(q).
  double f_tilde = kInf;
  for (std::size_t k = 1; k < n; ++k) {
    if (knots[k].crit_sqrt <= sq && std::isfinite(knots[k - 1].crit_sqrt)) {
      const CvfKnot& a = knots[k - 1];
      const CvfKnot& b = knots[k];
      const double w = (a.crit_sqrt - sq) / (a.crit_sqrt - b.crit_sqrt);
      const double root = a.sqrt_f + w * (b.sqrt_f - a.sqrt_f);
      f_tilde = root * root;
      break;
    }
  }
  return CriticalValueFunction(alpha, f_tilde, std::move(knots));
}

double cvf_eval(const CriticalValueFunction& cvf, double F) noexcept { return cvf.eval(F); }

double tf_adjusted_se(double se, double F, const CriticalValueFunction& cvf) {
  if (!(se > 0.0)) throw Error(ErrorCode::kDomain, "se must be > 0");
  const double c = cvf.eval(F);
  if (std::isinf(c)) return kInf;
  return se * std::sqrt(c / cvf.q());
}

double round_up_2dp(double x) noexcept {
  double cents = std::floor(x * 100.0 + 0.5);
  if (x > cents / 100.0 + 1e-9) cents += 1.0;
  return cents / 100.0;
}

Table3 emit_table3(const CriticalValueFunction& cvf) {
  Table3 t;
  for (int tenth = 0; tenth < 10; ++tenth) {
    for (int whole = 2; whole <= 9; ++whole) {
      const double root_f = whole + 0.1 * tenth;
      t.cells[tenth][whole - 2] = round_up_2dp(cvf.eval_sqrt(root_f));
    }
  }
  return t;
}

std::string table3_csv(const Table3& table) {
  std::string out = "sqrtF_int";
  for (int whole = 2; whole <= 9; ++whole) out += fmt::format(",{}", whole);
  out += '\n';
  for (int tenth = 0; tenth < 10; ++tenth) {
    out += fmt::format("0.{}", tenth);
    for (double v : table.cells[tenth]) out += fmt::format(",{:.2f}", v);
    out += '\n';
  }
  return out;
}

void save_cvf(const CriticalValueFunction& cvf, const std::filesystem::path& path) {
  Json knots = Json::array();
  for (const CvfKnot& k : cvf.tilde_knots()) {
    knots.push_back(Json::array({k.sqrt_f, std::isinf(k.crit_sqrt) ? Json(nullptr) : Json(k.crit_sqrt)}));
  }
  Json doc = {{"format", "ivtf-cvf"},
              {"version", kCacheVersion},
              {"alpha", cvf.alpha()},
              {"f_tilde", finite_or_null(cvf.f_tilde())},
              {"knots", knots},
              {"crc32", knot_checksum(cvf.alpha(), cvf.f_tilde(), knots)}};
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    os << doc.dump() << '\n';
    if (!os) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move cache into place: " + ec.message());
}

CriticalValueFunction load_cvf(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  Json doc;
  try {
    doc = Json::parse(is);
    if (doc.at("format") != "ivtf-cvf" || doc.at("version") != kCacheVersion) {
      throw Error(ErrorCode::kSchema, "cache version mismatch in " + path.string());
    }
    const double alpha = doc.at("alpha").get<double>();
    const double f_tilde = doc.at("f_tilde").is_null() ? kInf : doc.at("f_tilde").get<double>();
    const Json& knots = doc.at("knots");
    if (doc.at("crc32").get<std::uint32_t>() != knot_checksum(alpha, f_tilde, knots)) {
      throw Error(ErrorCode::kSchema, "checksum mismatch in " + path.string());
    }
    std::vector<CvfKnot> out;
    out.reserve(knots.size());
    for (const Json& k : knots) {
      out.push_back({k.at(0).get<double>(), k.at(1).is_null() ? kInf : k.at(1).get<double>()});
    }
    return CriticalValueFunction(alpha, f_tilde, std::move(out));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchema, fmt::format("malformed cache {}: {}", path.string(), e.what()));
  }
}

CriticalValueFunction cached_cvf(double alpha, const std::filesystem::path& dir) {
  if (dir.empty()) return build_cvf(alpha, default_cvf_grid());
  const std::filesystem::path file = dir / fmt::format("cvf-alpha-{}.json", alpha);
  if (std::filesystem::exists(file)) {
    try {
      CriticalValueFunction cvf = load_cvf(file);
      if (cvf.alpha() == alpha) return cvf;
    } catch (const Error&) {
      // stale or corrupt: rebuild below
    }
  }
  CriticalValueFunction cvf = build_cvf(alpha, default_cvf_grid());
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  save_cvf(cvf, file);
  return cvf;
}

}  // namespace ivtf
