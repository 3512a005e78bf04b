#pragma once

#include <stdexcept>
#include <string>

namespace pda {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated PDAF/PDAM/PGM input.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A value violates a typed invariant (non-finite entry, dim mismatch, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bad configuration: out-of-range parameter, provenance mismatch, k > n.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The regenerator could not produce features for a sample.
class RegenerationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace pda
