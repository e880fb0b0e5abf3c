#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivtf {

enum class ErrorCode {
  kDegenerateCorrelation,
  kDegenerateVariance,
  kNullDenominator,
  kSingularDenominator,
  kAsymptote,
  kNoRealRoot,
  kDegenerateStrength,
  kToleranceUnmet,
  kDomain,
  kUnattainableLevel,
  kNonconvergence,
  kEmptyCorpus,
  kSchema,
  kIo,
  kDegenerateSample,
  kUsage,
};

/// Stable machine-readable name, used in CLI error payloads.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ivtf
