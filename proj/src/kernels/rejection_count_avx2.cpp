#include <immintrin.h>

#include "ivtf/kernels/rejection_count.hpp"

namespace ivtf::kernels {

#if defined(__AVX2__)

std::uint64_t count_rejections_avx2(const Batch& b) noexcept {
  const __m256d rho = _mm256_set1_pd(b.rho);
  const __m256d one_minus = _mm256_set1_pd((1.0 - b.rho) * (1.0 + b.rho));
  const __m256d crit = _mm256_set1_pd(b.crit);
  const __m256d fbar = _mm256_set1_pd(b.f_threshold);
  std::uint64_t hits = 0;
  std::size_t i = 0;
  for (; i + 4 <= b.n; i += 4) {
    const __m256d ta = _mm256_loadu_pd(b.t_ar + i);
    const __m256d f = _mm256_loadu_pd(b.f + i);
    const __m256d ta2 = _mm256_mul_pd(ta, ta);
    const __m256d f2 = _mm256_mul_pd(f, f);
    const __m256d lhs = _mm256_mul_pd(ta2, f2);
    const __m256d d = _mm256_sub_pd(ta, _mm256_mul_pd(rho, f));
    const __m256d den = _mm256_add_pd(_mm256_mul_pd(d, d), _mm256_mul_pd(one_minus, f2));
    __m256d mask;
    switch (b.rule) {
      case Rule::kTsq:
        mask = _mm256_and_pd(_mm256_cmp_pd(lhs, _mm256_mul_pd(crit, den), _CMP_GT_OQ),
                             _mm256_cmp_pd(f2, fbar, _CMP_GT_OQ));
        break;
      case Rule::kHybrid: {
        const __m256d strong = _mm256_cmp_pd(f2, fbar, _CMP_GT_OQ);
        const __m256d t_rej = _mm256_cmp_pd(lhs, _mm256_mul_pd(crit, den), _CMP_GT_OQ);
        const __m256d ar_rej = _mm256_cmp_pd(ta2, crit, _CMP_GT_OQ);
        mask = _mm256_blendv_pd(ar_rej, t_rej, strong);
        break;
      }
      case Rule::kAr:
        mask = _mm256_cmp_pd(ta2, crit, _CMP_GT_OQ);
        break;
      case Rule::kTsqPerDraw: {
        const __m256d c = _mm256_loadu_pd(b.crit_per_draw + i);
        mask = _mm256_cmp_pd(lhs, _mm256_mul_pd(c, den), _CMP_GT_OQ);
        break;
      }
    }
    hits += static_cast<std::uint64_t>(__builtin_popcount(_mm256_movemask_pd(mask)));
  }
  Batch tail = b;
  tail.t_ar += i;
  tail.f += i;
  if (tail.crit_per_draw) tail.crit_per_draw += i;
  tail.n = b.n - i;
  return hits + count_rejections_scalar(tail);
}

#else

std::uint64_t count_rejections_avx2(const Batch& b) noexcept { return count_rejections_scalar(b); }

#endif

}  // namespace ivtf::kernels
