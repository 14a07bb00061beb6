#include "l3det/error.hpp"

namespace l3det {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedRecord: return "malformed-record";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Io: return "io";
        case ErrorKind::Selection: return "selection";
        case ErrorKind::InjectionCapacity: return "injection-capacity";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::Configuration: return "configuration";
        case ErrorKind::Backend: return "backend";
        case ErrorKind::Evaluation: return "evaluation";
        case ErrorKind::UndefinedMetrics: return "undefined-metrics";
        case ErrorKind::UndefinedCorrelation: return "undefined-correlation";
    }
    return "unknown";
}

ParseError::ParseError(std::size_t line, std::string field, const std::string& detail)
    : Error(ErrorKind::Parse,
            "line " + std::to_string(line) + ": field '" + field + "': " + detail),
      line_(line),
      field_(std::move(field)) {}

}  // namespace l3det
