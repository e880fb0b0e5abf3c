#include "ivtf/error.hpp"

namespace ivtf {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDegenerateCorrelation: return "degenerate_correlation";
    case ErrorCode::kDegenerateVariance: return "degenerate_variance";
    case ErrorCode::kNullDenominator: return "null_denominator";
    case ErrorCode::kSingularDenominator: return "singular_denominator";
    case ErrorCode::kAsymptote: return "asymptote";
    case ErrorCode::kNoRealRoot: return "no_real_root";
    case ErrorCode::kDegenerateStrength: return "degenerate_strength";
    case ErrorCode::kToleranceUnmet: return "tolerance_unmet";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kUnattainableLevel: return "unattainable_level";
    case ErrorCode::kNonconvergence: return "nonconvergence";
    case ErrorCode::kEmptyCorpus: return "empty_corpus";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDegenerateSample: return "degenerate_sample";
    case ErrorCode::kUsage: return "usage";
  }
  return "unknown";
}

}  // namespace ivtf
