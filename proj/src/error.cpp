#include "tokon/error.hpp"

namespace tokon {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::AllForecastsFailed: return "AllForecastsFailed";
    case Errc::NetworkError: return "NetworkError";
    case Errc::AuthError: return "AuthError";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::TooFewNumbers: return "TooFewNumbers";
    case Errc::NoNumbers: return "NoNumbers";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::DuplicateRank: return "DuplicateRank";
    case Errc::UnencodableByte: return "UnencodableByte";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::UnparsableRow: return "UnparsableRow";
    case Errc::InsufficientSeries: return "InsufficientSeries";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NoSuccessfulSeries: return "NoSuccessfulSeries";
    case Errc::NonPositiveBaseline: return "NonPositiveBaseline";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace tokon
