#pragma once

#include <stdexcept>
#include <string>

namespace meshmap {

enum class ErrorCode {
  DegenerateRotation,
  Shape,
  Load,
  Parse,
  NoCenter,
  NoPositive,
  EmptySupervision,
  Degenerate,
  Bounds,
  InvalidPrior,
  InvalidArgument,
  NotOrthonormal,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateRotation: return "degenerate_rotation";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Load: return "load";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::NoCenter: return "no_center";
    case ErrorCode::NoPositive: return "no_positive";
    case ErrorCode::EmptySupervision: return "empty_supervision";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Bounds: return "bounds";
    case ErrorCode::InvalidPrior: return "invalid_prior";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NotOrthonormal: return "not_orthonormal";
  }
  return "unknown";
}

/// Single exception type for the library; `code()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace meshmap
