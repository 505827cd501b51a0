#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace c2p {

enum class ErrorCode {
  EmptyCloud,
  InvalidTransform,
  DegenerateCorrespondences,
  InvalidConfig,
  EmptyResult,
  InsufficientDensity,
  NoCorrespondences,
  RegistrationFailed,
  NumericalError,
  ShapeMismatch,
  EmptyLandmarks,
  IoError,
  Internal,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::InvalidTransform: return "InvalidTransform";
    case ErrorCode::DegenerateCorrespondences: return "DegenerateCorrespondences";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::InsufficientDensity: return "InsufficientDensity";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::RegistrationFailed: return "RegistrationFailed";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyLandmarks: return "EmptyLandmarks";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI, the benchmark harness) can map it to an exit status or
/// a per-sample status string.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace c2p
