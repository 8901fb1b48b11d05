// Exception hierarchy shared across the toolkit.
#pragma once

#include <stdexcept>
#include <string>

namespace dve {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

// A record violating the serialized schema; message carries the line number.
struct SchemaError : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct AlphaOutOfRange : Error {
    using Error::Error;
};

struct ConstantInput : Error {
    using Error::Error;
};

struct DegenerateChance : Error {
    using Error::Error;
};

struct EncodeError : Error {
    using Error::Error;
};

struct EmptyText : EncodeError {
    using EncodeError::EncodeError;
};

struct TokenBudgetExceeded : EncodeError {
    using EncodeError::EncodeError;
};

struct ImageDecodeError : EncodeError {
    using EncodeError::EncodeError;
};

struct MissingCaption : Error {
    using Error::Error;
};

struct DivergenceDetected : Error {
    using Error::Error;
};

struct TransportError : Error {
    using Error::Error;
};

struct EmptyGeneration : Error {
    using Error::Error;
};

// External metric scorer failed; message is prefixed with the metric name.
struct ScorerFailure : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace dve
