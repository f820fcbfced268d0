#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace claps {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  NotSymmetric,
  IncompatibleHeadLoss,
  EmptyData,
  DegenerateDof,
  NonpositiveScale,
  NegativeQ,
  EmptyCalibration,
  EmptySplit,
  LengthMismatch,
  TooFewPoints,
  GridExceedsData,
  FileNotFound,
  NoNumericColumns,
  TargetMissing,
  TooSmall,
  InvalidCounts,
  TooFewSeeds,
  EmptyInput,
  ConfigInvalid,
  CheckpointInvalid,
  InjectedFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::IncompatibleHeadLoss: return "IncompatibleHeadLoss";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::DegenerateDof: return "DegenerateDof";
    case ErrorCode::NonpositiveScale: return "NonpositiveScale";
    case ErrorCode::NegativeQ: return "NegativeQ";
    case ErrorCode::EmptyCalibration: return "EmptyCalibration";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::GridExceedsData: return "GridExceedsData";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::NoNumericColumns: return "NoNumericColumns";
    case ErrorCode::TargetMissing: return "TargetMissing";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::TooFewSeeds: return "TooFewSeeds";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::CheckpointInvalid: return "CheckpointInvalid";
    case ErrorCode::InjectedFailure: return "InjectedFailure";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code; the message holds the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace claps
