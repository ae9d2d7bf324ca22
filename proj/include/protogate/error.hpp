#pragma once

#include <stdexcept>
#include <string>

namespace protogate {

enum class ErrorKind {
    ZeroNorm,
    DimMismatch,
    EmptyInput,
    EmptyBatch,
    MissingClass,
    TooFewClasses,
    LengthMismatch,
    DegenerateClass,
    PreconditionNotMet,
    ConfigError,
    ParseError,
    NormError,
    SchemaError,
    DuplicateId,
    InvariantViolation,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ZeroNorm: return "ZeroNorm";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::EmptyBatch: return "EmptyBatch";
        case ErrorKind::MissingClass: return "MissingClass";
        case ErrorKind::TooFewClasses: return "TooFewClasses";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::DegenerateClass: return "DegenerateClass";
        case ErrorKind::PreconditionNotMet: return "PreconditionNotMet";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NormError: return "NormError";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
    }
    return "Unknown";
}

// All library failures surface as Error. kind() separates input/validation
// problems (CLI exit 1) from internal invariant violations (CLI exit 2).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace protogate
