#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace covec {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file (bad line, bad header, truncation).
struct ParseError : Error {
    using Error::Error;
};

/// An id that cannot be resolved against the vocabulary.
struct LookupError : Error {
    using Error::Error;
};

/// Invalid configuration value.
struct ConfigError : Error {
    using Error::Error;
};

/// Mathematical precondition violated (zero vector, f=0, ...).
struct DomainError : Error {
    using Error::Error;
};

} // namespace covec
