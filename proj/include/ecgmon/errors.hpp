#pragma once

#include <stdexcept>
#include <string>

namespace ecgmon {

// Bad argument values (band edges, lengths, units). Maps to CLI exit code 1.
using ParameterError = std::invalid_argument;

// Malformed wire frames. Maps to CLI exit code 2.
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed files (weights container, CSV, binary records). Maps to CLI exit code 2.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ecgmon
