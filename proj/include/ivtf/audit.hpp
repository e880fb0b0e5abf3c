#pragma once

// Reclassification of published (t, F) pairs under size-correct procedures.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ivtf/procedure.hpp"

namespace ivtf {

struct SpecRecord {
  std::string spec_id;
  std::string paper_id;
  std::optional<double> t;
  std::optional<double> F;
  std::optional<double> weight;
};

/// Parses `spec_id,paper_id,t,F_derived,F_reported,weight` (empty cell =
/// missing). F_derived is used unless prefer_reported; the other column
/// fills in when the preferred one is empty. Missing weights become
/// 1 / (records sharing paper_id). Throws kSchema with the line number on
/// malformed input.
std::vector<SpecRecord> parse_corpus_csv(std::istream& in, bool prefer_reported = false);
std::vector<SpecRecord> load_corpus_csv(const std::string& path, bool prefer_reported = false);

/// Fills missing weights with 1 / (records sharing paper_id).
void fill_default_weights(std::vector<SpecRecord>& records);

enum class Decision { kReject, kAccept, kIndeterminate };

const char* to_string(Decision d) noexcept;

/// Applies proc to a published (t, F). Procedures needing t_AR are indeterminate.
Decision decide(const Procedure& proc, std::optional<double> t, std::optional<double> F);

struct NamedProcedure {
  std::string name;
  Procedure proc;
  double f_split = 10.0;  ///< F cut for the 2x2 table
};

/// conventional (q_{1-alpha}), threshold-2b (1.96^2, 104.7), threshold-2c
/// (3.43^2, 10), tf. The threshold presets are 5% only.
std::vector<NamedProcedure> default_audit_procedures(std::shared_ptr<const CriticalValueFunction> cvf);

/// Counts and shares indexed [significant ? 0 : 1][F > f_split ? 0 : 1].
struct Table2x2 {
  std::array<std::array<std::size_t, 2>, 2> counts{};
  std::array<std::array<double, 2>, 2> shares{};
  std::array<std::array<double, 2>, 2> weighted_shares{};
};

struct ProcedureAudit {
  std::string name;
  std::string rule;
  double f_split = 10.0;
  Table2x2 table;
  std::size_t indeterminate = 0;
  /// Among records with t^2 > 1.96^2 and F > 10: how many this rule leaves insignificant.
  std::size_t reclass_base = 0;
  std::size_t reclassified = 0;
  double reclass_share = 0.0;
  double reclass_weighted_share = 0.0;
};

struct AuditReport {
  std::size_t n_records = 0;
  std::size_t n_complete = 0;
  std::vector<ProcedureAudit> procedures;
  std::vector<std::string> spec_ids;  ///< canonical order
  std::vector<std::vector<Decision>> decisions;  ///< [record][procedure]
  std::string caveat;
};

/// Records are put in canonical (spec_id, paper_id) order first, so the
/// report does not depend on input order. Throws kEmptyCorpus when no
/// record has both t and F.
AuditReport classify_corpus(std::vector<SpecRecord> records, const std::vector<NamedProcedure>& procs);

/// JSON text; shares rounded to 6 decimals.
std::string audit_json(const AuditReport& report);

}  // namespace ivtf
