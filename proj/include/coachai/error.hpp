#pragma once

#include <stdexcept>
#include <string>

namespace coachai {

enum class ErrorKind {
    invalid_argument,
    not_found,
    conflict,
    validation,
    parse,
    io,
};

/// Base exception for every recoverable failure in the library. The kind
/// decides how the HTTP layer reports it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace coachai
