#pragma once

// Null rejection probabilities of each procedure at a nuisance point.

#include "ivtf/procedure.hpp"

namespace ivtf {

/// Pr[reject] under (t_AR, f) ~ N((0, f0), [[1, rho], [rho, 1]]).
/// |rho| > 1 - 1e-6 uses the exact rho = 1 formulas. Throws kDomain for tol
/// outside (1e-12, 1e-3] or |rho| > 1, and kToleranceUnmet when the
/// quadrature cannot certify abs_err <= tol.
SizeResult rejection_prob(const Procedure& proc, const NuisancePoint& p, double tol = 1e-8);

/// Closed form on rho = 1 for ConventionalT (F threshold 0) and ThresholdTF:
/// 1 - Phi(rA_hi v (sqrt(Fbar) - f0)) + Phi(rA_lo ^ (-sqrt(Fbar) - f0))
///   + 1{f0 > 4 sqrt(c), sqrt(Fbar) - f0 < rB_hi} [Phi(rB_hi) - Phi(rB_lo v (sqrt(Fbar) - f0))].
/// Throws kDomain for other procedures or f0 < 0.
double rejection_prob_rho1(const Procedure& proc, double f0);

/// Pr[|t_AR| > sqrt(crit), F <= Fbar] on rho = 1: the extra rejections the
/// AR fallback adds. At f0 = Fbar / (sqrt(Fbar) + sqrt(crit)) this is
/// Phi(-sqrt(crit)) - Phi((-2 Fbar - sqrt(crit Fbar)) / (sqrt(Fbar) + sqrt(crit))).
/// Throws kDomain when f_threshold < crit / 2.
double hybrid_extra_term(double f_threshold, double crit, double f0);

/// Positive f solving f^2 = c(f^2) (1 - rho^2); +inf if none below the pinned region.
double tf_asymptote(const CriticalValueFunction& cvf, double rho);

}  // namespace ivtf
