#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrb {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedModel,
  DimensionMismatch,
  RankDeficient,
  SeparationDetected,
  NonConvergence,
  EmptyCategory,
  UnsupportedKind,
  DegenerateTruncation,
  InvalidSize,
  IncompatibleResidual,
  TooManyFailures,
  TooFewReplicates,
  MethodCannotRecreate,
  LengthMismatch,
  NotAPermutation,
  UnknownScenario,
  ParseError,
  MissingColumn,
  AllRowsDropped,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedModel: return "UnsupportedModel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::DegenerateTruncation: return "DegenerateTruncation";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::IncompatibleResidual: return "IncompatibleResidual";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
    case ErrorCode::TooFewReplicates: return "TooFewReplicates";
    case ErrorCode::MethodCannotRecreate: return "MethodCannotRecreate";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotAPermutation: return "NotAPermutation";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::AllRowsDropped: return "AllRowsDropped";
  }
  return "Unknown";
}

/// Error raised by every module in the library. The module name and error
/// code travel with the exception so the CLI can report them verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message)
      : std::runtime_error(std::string(module) + "::" + std::string(error_name(code)) + ": " +
                           message),
        code_(code),
        module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace lrb
