#pragma once

#include <stdexcept>
#include <string>

namespace srm {

enum class ErrorCode {
  DegeneratePlane,
  DimensionMismatch,
  EmptyDataset,
  InvalidEpsilon,
  InvalidArgument,
  DomainError,
  DegenerateBasis,
  UncoveredDirection,
  ZeroVariance,
  NumericalFailure,
  DivergenceDetected,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  IoFailure,
};

// Coarse grouping used for CLI exit codes.
enum class ErrorClass { Validation, Io, Numeric };

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegeneratePlane: return "DegeneratePlane";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::UncoveredDirection: return "UncoveredDirection";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

inline ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::CountMismatch:
    case ErrorCode::IoFailure:
      return ErrorClass::Io;
    case ErrorCode::NumericalFailure:
    case ErrorCode::DivergenceDetected:
    case ErrorCode::ZeroVariance:
    case ErrorCode::DegenerateBasis:
    case ErrorCode::UncoveredDirection:
      return ErrorClass::Numeric;
    default:
      return ErrorClass::Validation;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace srm
