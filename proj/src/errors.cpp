#include "qfc/errors.hpp"

namespace qfc {

std::string_view errorName(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonNegligibleImaginaryPart: return "NonNegligibleImaginaryPart";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::AsymmetricGrid: return "AsymmetricGrid";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::TruncationLeak: return "TruncationLeak";
    case ErrorCode::StatePositivityViolation: return "StatePositivityViolation";
    case ErrorCode::NonPositiveGamma: return "NonPositiveGamma";
    case ErrorCode::GridUnderResolved: return "GridUnderResolved";
    case ErrorCode::NegativeDensity: return "NegativeDensity";
    case ErrorCode::CovarianceBlowup: return "CovarianceBlowup";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::MinimumOnBoundary: return "MinimumOnBoundary";
    case ErrorCode::TargetNotReached: return "TargetNotReached";
    case ErrorCode::SegmentTooCoarse: return "SegmentTooCoarse";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::TrajectoryFailure: return "TrajectoryFailure";
  }
  return "Unknown";
}

}  // namespace qfc
