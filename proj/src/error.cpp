#include "rrcal/error.hpp"

namespace rrcal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kNoConsensus: return "no-consensus";
    case ErrorCode::kInsufficientExcitation: return "insufficient-excitation";
    case ErrorCode::kInvalidWeight: return "invalid-weight";
    case ErrorCode::kUnidentifiable: return "unidentifiable";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace rrcal
