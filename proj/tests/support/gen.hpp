#pragma once

// Small seeded generators for property tests.

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>

#include "ivtf/tf_critical.hpp"

namespace testgen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
  // log-uniform on [lo, hi]
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline double phi_oracle(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// One 5% critical value function per test binary.
inline std::shared_ptr<const ivtf::CriticalValueFunction> cvf05() {
  static const auto cvf =
      std::make_shared<const ivtf::CriticalValueFunction>(ivtf::build_cvf(0.05, ivtf::default_cvf_grid()));
  return cvf;
}

}  // namespace testgen
