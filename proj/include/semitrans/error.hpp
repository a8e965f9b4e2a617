#pragma once

#include <stdexcept>
#include <string>

namespace semitrans {

enum class ErrorCode {
  InvalidArgument,
  InvalidConfig,
  ParseError,
  Io,
  EmptyInput,
  TooFewRecords,
  NoFailures,
  InvalidTime,
  InvalidIndicator,
  DimensionMismatch,
  GridMismatch,
  OutOfBox,
  NonConvergence,
  SingularMatrix,
  BoxEscape,
  ResidualTooLarge,
  Overflow,
  Internal
};

const char* error_code_name(ErrorCode code);

// true for failures of a numerical stage (as opposed to bad input)
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace semitrans
