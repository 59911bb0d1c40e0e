#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rou {

enum class ErrorCode {
  InvalidArgument,
  NotPsd,
  NotHurwitz,
  NotStable,
  DecayViolated,
  GridExceeded,
  IntervalMismatch,
  RegimeTooWide,
  FitDegenerate,
  EpsilonOne,
  StepTooLarge,
  GateUnsatisfied,
  EmptyWindow,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code lets callers (the CLI in
// particular) turn gate failures into report rows instead of crashes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::NotStable: return "NotStable";
    case ErrorCode::DecayViolated: return "DecayViolated";
    case ErrorCode::GridExceeded: return "GridExceeded";
    case ErrorCode::IntervalMismatch: return "IntervalMismatch";
    case ErrorCode::RegimeTooWide: return "RegimeTooWide";
    case ErrorCode::FitDegenerate: return "FitDegenerate";
    case ErrorCode::EpsilonOne: return "EpsilonOne";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::GateUnsatisfied: return "GateUnsatisfied";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace rou
