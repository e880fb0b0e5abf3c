#pragma once

// Construction of the tF critical value function, Table 3 export, knot
// caching and tF-adjusted standard errors.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "ivtf/critical_value_function.hpp"

namespace ivtf {

struct CvfBuildOptions {
  double cap = 50.0;          ///< sqrt(c) above this is stored as unbounded
  double sweep_tol = 1e-6;    ///< fixed-point stopping rule on knot changes
  int max_sweeps = 50;
};

/// sqrt(F) knots first + step, first + 2 step, ... up to last (inclusive).
/// The default grid runs 1.961 to 12 in steps of 0.005 and is extended to 20
/// so the raw curve also covers the ridge for f0 up to about 18.
std::vector<double> default_cvf_grid(double first = 1.961, double last = 20.0, double step = 0.005);

/// Builds c(F) so that Pr[t^2 > c(F)] = alpha along the rho = 1 ridge.
/// `grid` lists ascending sqrt(F) knots above sqrt(q); sqrt(q) itself is
/// prepended with an unbounded value. When the raw curve never reaches
/// sqrt(q) on the grid, f_tilde is +inf and knots stop at the first one
/// at or past sqrt(F) = 12.
/// Throws kDomain on bad input and kNonconvergence if the knot sweep does
/// not settle.
CriticalValueFunction build_cvf(double alpha, const std::vector<double>& grid,
                                const CvfBuildOptions& opts = {});

/// c(F); +infinity below q.
double cvf_eval(const CriticalValueFunction& cvf, double F) noexcept;

/// se * sqrt(c(F) / q); +infinity where c(F) is unbounded.
double tf_adjusted_se(double se, double F, const CriticalValueFunction& cvf);

/// Round half up to two decimals, then up by 0.01 if that lost anything.
double round_up_2dp(double x) noexcept;

/// sqrt(c) cells: rows are the first decimal of sqrt(F) (0.0 .. 0.9),
/// columns its integer part (2 .. 9).
struct Table3 {
  std::array<std::array<double, 8>, 10> cells{};

  double at(int integer_part, int tenth) const { return cells.at(tenth).at(integer_part - 2); }
};

Table3 emit_table3(const CriticalValueFunction& cvf);

/// CSV with header `sqrtF_int,2,...,9` and rows keyed `0.0` .. `0.9`.
std::string table3_csv(const Table3& table);

/// Knot cache: versioned JSON with a crc32 over the knot payload.
void save_cvf(const CriticalValueFunction& cvf, const std::filesystem::path& path);
/// Throws kIo when unreadable and kSchema on a version or checksum mismatch.
CriticalValueFunction load_cvf(const std::filesystem::path& path);

/// Loads `<dir>/cvf-alpha-<alpha>.json` when present and valid, otherwise
/// builds with the default grid and writes the file. An empty dir builds
/// without caching.
CriticalValueFunction cached_cvf(double alpha, const std::filesystem::path& dir);

}  // namespace ivtf
