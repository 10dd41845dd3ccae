#include "h2mm/errors.hpp"

namespace h2mm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kSpectraOverlap: return "SpectraOverlap";
    case ErrorCode::kUnstableMatrix: return "UnstableMatrix";
    case ErrorCode::kNonSymmetricInput: return "NonSymmetricInput";
    case ErrorCode::kNotObservable: return "NotObservable";
    case ErrorCode::kNotControllable: return "NotControllable";
    case ErrorCode::kPlacementFailed: return "PlacementFailed";
    case ErrorCode::kResolventSingular: return "ResolventSingular";
    case ErrorCode::kGramianMismatch: return "GramianMismatch";
    case ErrorCode::kPointOnSpectrum: return "PointOnSpectrum";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kClusteredPoints: return "ClusteredPoints";
    case ErrorCode::kInfeasiblePoint: return "InfeasiblePoint";
    case ErrorCode::kInfeasibleStart: return "InfeasibleStart";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kNewtonStalled: return "NewtonStalled";
    case ErrorCode::kSizeLimit: return "SizeLimit";
    case ErrorCode::kSingularM22: return "SingularM22";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace h2mm
