#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace interocept {

enum class ErrorCode {
  OutOfBounds,
  InvalidMultiplier,
  CellIsObstacle,
  UnknownVertex,
  DuplicateVertex,
  EmptyMembers,
  NotAPrecondition,
  InvalidEndpoint,
  BrokenPath,
  TickMismatch,
  InvalidRange,
  EmptyPath,
  DuplicateId,
  EmptyText,
  MissingAnchor,
  ProfileTooShort,
  InvalidArgument,
  TooFewWindows,
  NonFiniteInput,
  DimensionMismatch,
  EmptyTrainingSet,
  DivergedLoss,
  Misaligned,
  UnknownContext,
  DegenerateData,
  InvalidPhase,
  RobotOffPath,
  EmptyBins,
  InconsistentIds,
  BindFailure,
  InvalidScenario,
  UnknownRobot,
  MalformedCommand,
  NoData,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidMultiplier: return "InvalidMultiplier";
    case ErrorCode::CellIsObstacle: return "CellIsObstacle";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::DuplicateVertex: return "DuplicateVertex";
    case ErrorCode::EmptyMembers: return "EmptyMembers";
    case ErrorCode::NotAPrecondition: return "NotAPrecondition";
    case ErrorCode::InvalidEndpoint: return "InvalidEndpoint";
    case ErrorCode::BrokenPath: return "BrokenPath";
    case ErrorCode::TickMismatch: return "TickMismatch";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::MissingAnchor: return "MissingAnchor";
    case ErrorCode::ProfileTooShort: return "ProfileTooShort";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooFewWindows: return "TooFewWindows";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::Misaligned: return "Misaligned";
    case ErrorCode::UnknownContext: return "UnknownContext";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::InvalidPhase: return "InvalidPhase";
    case ErrorCode::RobotOffPath: return "RobotOffPath";
    case ErrorCode::EmptyBins: return "EmptyBins";
    case ErrorCode::InconsistentIds: return "InconsistentIds";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::UnknownRobot: return "UnknownRobot";
    case ErrorCode::MalformedCommand: return "MalformedCommand";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace interocept
