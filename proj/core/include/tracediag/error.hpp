#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tracediag {

enum class ErrorKind {
  MalformedRecord,
  SchemaMismatch,
  EmptyTrace,
  TraceTooShort,
  EmptyDataset,
  InvalidParams,
  TooFewSamples,
  ModelNotFitted,
  DimensionMismatch,
  UnknownLoss,
  NoMutableTarget,
  EvaluatorFailure,
  ExhaustedOperators,
  ParseError,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library. `kind()` identifies the failure;
/// `line()` is set for errors tied to a 1-based input line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace tracediag
