#pragma once

#include <stdexcept>
#include <string>

namespace minimr {

// Base class for all errors raised by the engine and its components.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data (corpus lines, encoded pairs).
struct ParseError : Error {
    using Error::Error;
};

// Pair cannot be encoded (empty key, field over 2^32-1 bytes).
struct EncodeError : Error {
    using Error::Error;
};

// Invalid configuration values (zero reducers, empty vocabulary, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Violation of the task-registry protocol (register after completion,
// more completions than registrations).
struct ProtocolError : Error {
    using Error::Error;
};

// Unsigned counter would exceed its range. Counts never wrap silently.
struct OverflowError : Error {
    using Error::Error;
};

// Filesystem or cache-preload failure.
struct IoError : Error {
    using Error::Error;
};

// Broken internal invariant (unsorted spill input, partition out of range).
struct InternalError : Error {
    using Error::Error;
};

}  // namespace minimr
