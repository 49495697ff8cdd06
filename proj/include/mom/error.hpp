#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mom {

enum class ErrorKind {
  BehindCamera,
  RankDeficient,
  InsufficientCorrespondences,
  DegenerateConfiguration,
  DegenerateBaseline,
  SolutionAtInfinity,
  FrameFailed,
  InvalidSubsetSize,
  Overflow,
  InsufficientSamples,
  ShapeMismatch,
  StaleTape,
  EmptyDataset,
  EmptyTrajectory,
  TooShort,
  InvalidArgument,
  InvalidConfig,
  IOFailure,
  ParseError,
  CheckpointMismatch,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BehindCamera: return "BehindCamera";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorKind::SolutionAtInfinity: return "SolutionAtInfinity";
    case ErrorKind::FrameFailed: return "FrameFailed";
    case ErrorKind::InvalidSubsetSize: return "InvalidSubsetSize";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::StaleTape: return "StaleTape";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IOFailure: return "IOFailure";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::CheckpointMismatch: return "CheckpointMismatch";
  }
  return "Unknown";
}

}  // namespace mom
