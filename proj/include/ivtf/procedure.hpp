#pragma once

// Decision rules for H0: beta = beta_0 and the nuisance point indexing the
// null law of (t_AR, f).

#include <memory>
#include <string>
#include <variant>

#include "ivtf/critical_value_function.hpp"

namespace ivtf {

struct NuisancePoint {
  double rho = 0.0;
  double f0 = 0.0;  ///< >= 0; negative values are reflected by callers

  double ef() const noexcept { return 1.0 + f0 * f0; }
  static NuisancePoint from_ef(double rho, double ef);
};

/// Reject when t^2 > crit.
struct ConventionalT {
  double crit = 0.0;
};

/// Reject when t^2 > crit and F > f_threshold.
struct ThresholdTF {
  double crit = 0.0;
  double f_threshold = 0.0;
};

/// ThresholdTF, falling back to t_AR^2 > crit when F <= f_threshold.
struct HybridAR {
  double crit = 0.0;
  double f_threshold = 0.0;
};

/// Reject when t_AR^2 > crit.
struct PureAR {
  double crit = 0.0;
};

/// Reject when t^2 > c(F).
struct TFProcedure {
  std::shared_ptr<const CriticalValueFunction> cvf;
};

using Procedure = std::variant<ConventionalT, ThresholdTF, HybridAR, PureAR, TFProcedure>;

/// Throws kDomain on a non-positive crit or threshold or a missing cvf.
void validate(const Procedure& proc);

std::string describe(const Procedure& proc);

struct SizeResult {
  double prob = 0.0;
  double abs_err = 0.0;
  NuisancePoint point;
};

}  // namespace ivtf
