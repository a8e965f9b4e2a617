#include "semitrans/error.hpp"

namespace semitrans {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidConfig: return "invalid_config";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::TooFewRecords: return "too_few_records";
    case ErrorCode::NoFailures: return "no_failures";
    case ErrorCode::InvalidTime: return "invalid_time";
    case ErrorCode::InvalidIndicator: return "invalid_indicator";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::GridMismatch: return "grid_mismatch";
    case ErrorCode::OutOfBox: return "out_of_box";
    case ErrorCode::NonConvergence: return "non_convergence";
    case ErrorCode::SingularMatrix: return "singular_matrix";
    case ErrorCode::BoxEscape: return "box_escape";
    case ErrorCode::ResidualTooLarge: return "residual_too_large";
    case ErrorCode::Overflow: return "overflow";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvergence:
    case ErrorCode::SingularMatrix:
    case ErrorCode::BoxEscape:
    case ErrorCode::ResidualTooLarge:
    case ErrorCode::Overflow:
      return true;
    default:
      return false;
  }
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace semitrans
