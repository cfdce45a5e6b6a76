#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qfc {

enum class ErrorCode {
  DimensionMismatch,
  NonNegligibleImaginaryPart,
  InvalidState,
  AsymmetricGrid,
  GridTooCoarse,
  TruncationLeak,
  StatePositivityViolation,
  NonPositiveGamma,
  GridUnderResolved,
  NegativeDensity,
  CovarianceBlowup,
  NotStabilizable,
  NoConvergence,
  MinimumOnBoundary,
  TargetNotReached,
  SegmentTooCoarse,
  FileNotFound,
  UnknownScenario,
  MissingKey,
  UnknownKey,
  InvalidValue,
  IoError,
  TrajectoryFailure,
};

std::string_view errorName(ErrorCode code);

// Every failure raised by the library carries a machine-readable code; the
// CLI prints errorName(code) on its error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the ensemble runner; wraps the first failing trajectory.
class TrajectoryError : public Error {
 public:
  TrajectoryError(std::size_t index, ErrorCode inner, const std::string& message)
      : Error(ErrorCode::TrajectoryFailure,
              "trajectory " + std::to_string(index) + ": " + message),
        index_(index),
        inner_(inner) {}

  std::size_t trajectory() const noexcept { return index_; }
  ErrorCode innerCode() const noexcept { return inner_; }

 private:
  std::size_t index_;
  ErrorCode inner_;
};

class TargetNotReachedError : public Error {
 public:
  TargetNotReachedError(std::size_t missed, std::size_t total)
      : Error(ErrorCode::TargetNotReached,
              std::to_string(missed) + " of " + std::to_string(total) +
                  " trajectories did not reach the target purity"),
        missed_(missed) {}

  std::size_t missed() const noexcept { return missed_; }

 private:
  std::size_t missed_;
};

enum class BoundaryEdge { Lower, Upper };

class MinimumOnBoundaryError : public Error {
 public:
  MinimumOnBoundaryError(BoundaryEdge edge, double gamma)
      : Error(ErrorCode::MinimumOnBoundary,
              std::string("cost minimum sits on the ") +
                  (edge == BoundaryEdge::Lower ? "lower" : "upper") +
                  " edge of the gamma range (gamma = " + std::to_string(gamma) + ")"),
        edge_(edge) {}

  BoundaryEdge edge() const noexcept { return edge_; }

 private:
  BoundaryEdge edge_;
};

}  // namespace qfc
