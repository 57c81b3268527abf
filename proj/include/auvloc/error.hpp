#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace auvloc {

// Values are stable: the C API and the CLI exit codes are derived from them.
enum class ErrorCode : int {
  RankDeficient = 1,
  NotSymmetric = 2,
  NoRealRoot = 3,
  NoPositiveRoot = 4,
  SingularGradient = 5,
  PreconditionViolated = 6,
  InvalidNoise = 7,
  InvalidDt = 8,
  SingularInnovation = 9,
  PlanExhausted = 10,
  QNotPSD = 11,
  EmptyInput = 12,
  ParseError = 13,
  ValidationError = 14,
  IoError = 15,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace auvloc
