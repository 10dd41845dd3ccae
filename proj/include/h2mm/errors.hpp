#pragma once

#include <stdexcept>
#include <string>

namespace h2mm {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNonFinite,
  kSpectraOverlap,
  kUnstableMatrix,
  kNonSymmetricInput,
  kNotObservable,
  kNotControllable,
  kPlacementFailed,
  kResolventSingular,
  kGramianMismatch,
  kPointOnSpectrum,
  kRankDeficient,
  kClusteredPoints,
  kInfeasiblePoint,
  kInfeasibleStart,
  kInfeasible,
  kNewtonStalled,
  kSizeLimit,
  kSingularM22,
  kIoFailure,
  kParseError,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace h2mm
