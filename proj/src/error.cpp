#include "auvloc/error.hpp"

namespace auvloc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NoRealRoot: return "NoRealRoot";
    case ErrorCode::NoPositiveRoot: return "NoPositiveRoot";
    case ErrorCode::SingularGradient: return "SingularGradient";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::InvalidNoise: return "InvalidNoise";
    case ErrorCode::InvalidDt: return "InvalidDt";
    case ErrorCode::SingularInnovation: return "SingularInnovation";
    case ErrorCode::PlanExhausted: return "PlanExhausted";
    case ErrorCode::QNotPSD: return "QNotPSD";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace auvloc
