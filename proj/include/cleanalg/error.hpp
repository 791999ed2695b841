#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cleanalg {

enum class ErrorCode {
  DimensionMismatch,
  NonFinite,
  NotSquare,
  InvalidTolerance,
  NotHermitian,
  NotProjection,
  NotPartialIsometry,
  BlockMismatch,
  CornerNotBoundedBelow,
  CornerNotInvertible,
  BadOffDiagonal,
  NotGenericPosition,
  NotInvertibleDifference,
  WitnessMismatch,
  ConditionAFailed,
  ConditionBFailed,
  RankConditionFailed,
  InternalInvariantViolation,
  UnknownGenerator,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::InvalidTolerance: return "InvalidTolerance";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotProjection: return "NotProjection";
    case ErrorCode::NotPartialIsometry: return "NotPartialIsometry";
    case ErrorCode::BlockMismatch: return "BlockMismatch";
    case ErrorCode::CornerNotBoundedBelow: return "CornerNotBoundedBelow";
    case ErrorCode::CornerNotInvertible: return "CornerNotInvertible";
    case ErrorCode::BadOffDiagonal: return "BadOffDiagonal";
    case ErrorCode::NotGenericPosition: return "NotGenericPosition";
    case ErrorCode::NotInvertibleDifference: return "NotInvertibleDifference";
    case ErrorCode::WitnessMismatch: return "WitnessMismatch";
    case ErrorCode::ConditionAFailed: return "ConditionAFailed";
    case ErrorCode::ConditionBFailed: return "ConditionBFailed";
    case ErrorCode::RankConditionFailed: return "RankConditionFailed";
    case ErrorCode::InternalInvariantViolation: return "InternalInvariantViolation";
    case ErrorCode::UnknownGenerator: return "UnknownGenerator";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library. The message carries the measured
/// quantities that triggered it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cleanalg
