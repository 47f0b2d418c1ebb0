#pragma once

#include <stdexcept>
#include <string>

namespace oncf {

// Base class for all library errors. The CLI maps subclasses to exit codes:
// ConfigError -> 1, data/protocol/parse errors -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape mismatch between tensor operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Out-of-range element or id access.
class IndexError : public Error {
public:
    using Error::Error;
};

// Malformed input file; message carries the line number.
class ParseError : public Error {
public:
    using Error::Error;
};

// Missing/empty/inconsistent data artifacts.
class DataError : public Error {
public:
    using Error::Error;
};

// Violations of the split/evaluation protocol (e.g. not enough unseen items).
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Negative sampling cannot make progress.
class SamplingError : public Error {
public:
    using Error::Error;
};

// Invalid configuration or incompatible artifacts (e.g. checkpoint K mismatch).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values detected during training.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace oncf
