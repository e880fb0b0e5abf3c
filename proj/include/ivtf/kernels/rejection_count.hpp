#pragma once

// Counting kernels for Monte Carlo rejection rates. The scalar version is
// the reference; the AVX2 version performs the same operations in the same
// order and must return identical counts.

#include <cstddef>
#include <cstdint>

namespace ivtf::kernels {

enum class Rule : std::uint8_t {
  kTsq,         ///< t^2 > crit and F > f_threshold (threshold < 0: no F condition)
  kHybrid,      ///< F > f_threshold ? t^2 > crit : t_ar^2 > crit
  kAr,          ///< t_ar^2 > crit
  kTsqPerDraw,  ///< t^2 > crit_per_draw[i]; +inf never rejects
};

struct Batch {
  const double* t_ar = nullptr;
  const double* f = nullptr;
  const double* crit_per_draw = nullptr;  ///< kTsqPerDraw only
  std::size_t n = 0;
  double rho = 0.0;
  double crit = 0.0;
  double f_threshold = -1.0;
  Rule rule = Rule::kTsq;
};

// t^2 > c is tested as t_ar^2 f^2 > c ((t_ar - rho f)^2 + (1 - rho^2) f^2),
// which stays finite where t itself is unbounded.
std::uint64_t count_rejections_scalar(const Batch& b) noexcept;
std::uint64_t count_rejections_avx2(const Batch& b) noexcept;

bool avx2_available() noexcept;

/// AVX2 when the CPU has it, scalar otherwise.
std::uint64_t count_rejections(const Batch& b) noexcept;

}  // namespace ivtf::kernels
