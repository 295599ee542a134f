#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wqcascade {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based; column 0 means the
/// whole line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters, options or configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File system failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace wqcascade
