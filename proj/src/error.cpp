#include "fls/error.hpp"

namespace fls {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kDegenerateCloud: return "degenerate_cloud";
    case ErrorCode::kDuplicatePoints: return "duplicate_points";
    case ErrorCode::kSpecMismatch: return "spec_mismatch";
    case ErrorCode::kSolverFailure: return "solver_failure";
    case ErrorCode::kTooFewCorrespondences: return "too_few_correspondences";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {

std::string format_position(const std::string& source, std::size_t line, std::size_t offset) {
  std::string out = source;
  if (line > 0) {
    out += ":" + std::to_string(line);
  } else {
    out += " @byte " + std::to_string(offset);
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::string source, std::size_t line, std::size_t offset,
                       const std::string& message)
    : Error(ErrorCode::kParse, format_position(source, line, offset) + ": " + message),
      source_(std::move(source)),
      line_(line),
      offset_(offset) {}

}  // namespace fls
