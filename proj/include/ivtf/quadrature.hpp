#pragma once

// Globally adaptive 7/15-point Gauss-Kronrod quadrature over a list of
// breakpoints. The segment with the largest error estimate is bisected until
// the summed estimate drops below the requested absolute tolerance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

namespace ivtf::quadrature {

struct Result {
  double value = 0.0;
  double abs_err = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

namespace detail {

// Kronrod abscissae on [0, 1]; odd indices are the Gauss-7 nodes.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double err;
  bool operator<(const Segment& o) const { return err < o.err; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over [breaks.front(), breaks.back()], never placing a panel
/// across an interior breakpoint. Breakpoints must be ascending.
template <class F>
Result integrate(F&& f, std::span<const double> breaks, double abs_tol,
                 std::size_t max_segments = 4000) {
  Result out;
  std::priority_queue<detail::Segment> queue;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    detail::Segment s = detail::gk15(f, breaks[i], breaks[i + 1]);
    out.evaluations += 15;
    total += s.value;
    total_err += s.err;
    queue.push(s);
  }
  while (total_err > abs_tol && queue.size() < max_segments) {
    const detail::Segment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Out of floating-point resolution; keep the estimate as is.
      queue.push({worst.a, worst.b, worst.value, 0.0});
      total_err -= worst.err;
      continue;
    }
    const detail::Segment left = detail::gk15(f, worst.a, mid);
    const detail::Segment right = detail::gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    queue.push(left);
    queue.push(right);
  }
  // Re-sum to shed accumulated rounding from the running updates.
  out.value = 0.0;
  out.abs_err = 0.0;
  while (!queue.empty()) {
    out.value += queue.top().value;
    out.abs_err += queue.top().err;
    queue.pop();
  }
  out.converged = out.abs_err <= abs_tol;
  return out;
}

/// Sorted, deduplicated breakpoints clipped to [lo, hi], ends included.
inline std::vector<double> make_breaks(double lo, double hi, std::span<const double> interior) {
  std::vector<double> b{lo, hi};
  for (double x : interior) {
    if (std::isfinite(x) && x > lo && x < hi) b.push_back(x);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

}  // namespace ivtf::quadrature
