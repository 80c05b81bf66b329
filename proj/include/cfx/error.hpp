#pragma once

#include <stdexcept>
#include <string>

namespace cfx {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user input: unreadable files, malformed config, illegal option values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed structured text (schema documents, CSV, rule blocks).
/// Carries a 1-based line and column when known (0 = unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        if (line == 0) return what;
        std::string msg = "line " + std::to_string(line);
        if (column > 0) msg += ", column " + std::to_string(column);
        return msg + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

/// Structurally well-formed input that violates a schema or domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operation was invoked on inputs that violate its stated precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// LLM backend failures: transport errors, bad responses, replay misses.
class BackendError : public Error {
public:
    using Error::Error;
};

/// Replay-mode lookup failed; carries the canonical request key so the
/// transcript fixture can be regenerated or extended.
class ReplayMissError : public BackendError {
public:
    ReplayMissError(const std::string& key, const std::string& request_summary)
        : BackendError("replay miss for request key " + key + "\n" + request_summary), key_(key) {}

    const std::string& key() const { return key_; }

private:
    std::string key_;
};

}  // namespace cfx
