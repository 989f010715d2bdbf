#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rrcal {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyInput,
  kInsufficientData,
  kDegenerateGeometry,
  kNoConsensus,
  kInsufficientExcitation,
  kInvalidWeight,
  kUnidentifiable,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure carrying the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rrcal
