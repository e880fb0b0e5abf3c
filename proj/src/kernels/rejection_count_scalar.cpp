#include "ivtf/kernels/rejection_count.hpp"

namespace ivtf::kernels {

std::uint64_t count_rejections_scalar(const Batch& b) noexcept {
  const double one_minus = (1.0 - b.rho) * (1.0 + b.rho);
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < b.n; ++i) {
    const double ta = b.t_ar[i];
    const double f = b.f[i];
    const double ta2 = ta * ta;
    const double f2 = f * f;
    const double lhs = ta2 * f2;
    const double d = ta - b.rho * f;
    const double den = d * d + one_minus * f2;
    bool reject = false;
    switch (b.rule) {
      case Rule::kTsq:
        reject = lhs > b.crit * den && f2 > b.f_threshold;
        break;
      case Rule::kHybrid:
        reject = f2 > b.f_threshold ? lhs > b.crit * den : ta2 > b.crit;
        break;
      case Rule::kAr:
        reject = ta2 > b.crit;
        break;
      case Rule::kTsqPerDraw:
        reject = lhs > b.crit_per_draw[i] * den;
        break;
    }
    hits += reject ? 1 : 0;
  }
  return hits;
}

bool avx2_available() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::uint64_t count_rejections(const Batch& b) noexcept {
  static const bool use_avx2 = avx2_available();
  return use_avx2 ? count_rejections_avx2(b) : count_rejections_scalar(b);
}

}  // namespace ivtf::kernels
