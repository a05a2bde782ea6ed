#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tokon {

enum class Errc {
  InvalidArgument,
  EmptyInput,
  DegenerateVariance,
  AllForecastsFailed,
  NetworkError,
  AuthError,
  ParseFailure,
  TooFewNumbers,
  NoNumbers,
  MalformedLine,
  DuplicateRank,
  UnencodableByte,
  MissingColumn,
  UnparsableRow,
  InsufficientSeries,
  SchemaViolation,
  LengthMismatch,
  NoSuccessfulSeries,
  NonPositiveBaseline,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI and tests can branch on the kind instead of the message.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

}  // namespace tokon
