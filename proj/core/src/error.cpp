#include "tracediag/error.hpp"

namespace tracediag {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::TraceTooShort: return "TraceTooShort";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::ModelNotFitted: return "ModelNotFitted";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownLoss: return "UnknownLoss";
    case ErrorKind::NoMutableTarget: return "NoMutableTarget";
    case ErrorKind::EvaluatorFailure: return "EvaluatorFailure";
    case ErrorKind::ExhaustedOperators: return "ExhaustedOperators";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(message), kind_(kind), line_(line) {}

}  // namespace tracediag
