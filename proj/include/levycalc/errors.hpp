#pragma once

#include <stdexcept>
#include <string>

namespace levycalc {

/// Raised when an operation receives an argument outside its domain.
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an operation is asked for something the catalog cannot represent.
class UnsupportedOperation : public std::runtime_error {
public:
    explicit UnsupportedOperation(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed or unresolvable experiment configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace levycalc
