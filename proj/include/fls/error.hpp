#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fls {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNonFinite,
  kDegenerateCloud,
  kDuplicatePoints,
  kSpecMismatch,
  kSolverFailure,
  kTooFewCorrespondences,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Base of every error thrown by the library. The code lets callers branch
/// without parsing messages; what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parser failure with the position where it happened. For text input
/// `line` is 1-based; for binary payloads `line` is 0 and `offset` is the
/// byte offset into the file.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t offset, const std::string& message);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string source_;
  std::size_t line_;
  std::size_t offset_;
};

}  // namespace fls
