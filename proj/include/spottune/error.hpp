#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spottune {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible operand shapes; message names the op and both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Non-finite values produced during computation, or NaN loss during training.
struct NumericError : Error {
    using Error::Error;
};

// Malformed binary file; `offset` is the byte position of the problem.
struct ParseError : Error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t at) : Error(msg), offset(at) {}
};

// Bad configuration value; `key` names the offending config key.
struct ConfigError : Error {
    std::string key;
    ConfigError(std::string k, const std::string& msg) : Error(msg), key(std::move(k)) {}
};

// Bad command-line invocation.
struct UsageError : Error {
    using Error::Error;
};

}  // namespace spottune
