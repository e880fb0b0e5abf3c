#pragma once

// Worst-case size over the nuisance space and the constants derived from it.

#include <optional>
#include <vector>

#include "ivtf/procedure.hpp"

namespace ivtf {

struct WorstCase {
  double max_prob = 0.0;
  double arg_rho = 0.0;
  double arg_f0 = 0.0;
  double certified_tol = 0.0;
};

struct WorstCaseOptions {
  int n_rho = 201;
  int n_f0 = 201;
  double f0_max = 0.0;  ///< 0 picks a procedure-dependent default
  int refine_starts = 4;
};

/// Default upper end of the f0 search: 20, widened to 2 sqrt(Fbar) + 10 for
/// threshold rules and sqrt(F~) + 10 for tF.
double default_f0_max(const Procedure& proc);

/// Sup of rejection_prob over rho in [0, 1] (mirror covers rho < 0) and
/// f0 in [0, f0_max]: grid, exact rho = 1 ridge scan including f0*, then
/// local refinement from the best grid maxima.
WorstCase worst_case_size(const Procedure& proc, double tol = 1e-7, const WorstCaseOptions& opts = {});

/// 1 - Phi(sqrt(Fbar c) / (sqrt Fbar + sqrt c)) + Phi((-sqrt(Fbar c) - 2 Fbar) / (sqrt Fbar + sqrt c)).
double local_max_size(double f_threshold, double crit);

/// Fbar / (sqrt Fbar + sqrt c): where the rho = 1 threshold size peaks.
double local_max_f0(double f_threshold, double crit) noexcept;

/// Max over f0 of the exact rho = 1 size of ThresholdTF(crit, f_threshold),
/// with the maximizing f0.
struct RidgeMax {
  double prob = 0.0;
  double f0 = 0.0;
};
RidgeMax threshold_ridge_max(double f_threshold, double crit);

/// Fbar with worst-case size alpha, or nullopt when no Fbar in [1, 1e6] works.
std::optional<double> solve_threshold_F(double crit, double alpha);

/// c with worst-case size alpha at the given threshold. Throws
/// kUnattainableLevel when c in [q, 400] cannot reach alpha.
double solve_critical_value(double f_threshold, double alpha);

struct GridSpec {
  int n_rho = 201;
  int n_ef = 201;
  double ef_min = 1.0;
  double ef_max = 400.0;
};

struct ValidityRegion {
  double alpha = 0.0;
  double crit = 0.0;
  std::vector<double> rho;             ///< column coordinates
  std::vector<double> ef;              ///< row coordinates
  std::vector<std::vector<bool>> valid;  ///< valid[i_ef][i_rho]
  std::vector<std::vector<double>> size;
  double rho_bar = 0.0;
  std::optional<double> ef_bar;
  double certified_tol = 0.0;
};

/// Validity of the conventional test t^2 > crit over (rho, E[F]) with
/// E[F] = 1 + f0^2, plus the refined boundaries rho_bar and E[F]-bar.
ValidityRegion validity_region(double crit, double alpha, const GridSpec& grid = {});

struct NonexistenceRow {
  double f_threshold = 0.0;
  double f0_star = 0.0;
  double bound = 0.0;  ///< lower bound on the hybrid rule's size
  bool exceeds_alpha = false;
};

/// For each Fbar: 1 - Phi(sqrt(c Fbar) / (sqrt Fbar + sqrt c)) + Phi(-sqrt c),
/// the hybrid AR rule's size at (rho = 1, f0*), compared with alpha.
std::vector<NonexistenceRow> hybrid_nonexistence_certificate(double crit, const std::vector<double>& f_grid,
                                                             double alpha = 0.05);

}  // namespace ivtf
