#pragma once

#include <stdexcept>
#include <string>

namespace glean {

// Base for every failure raised by the library. Subclasses let the CLI map
// failures onto exit codes and let the pipeline decide fail-soft vs fail-hard.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or missing configuration / input files; the pipeline aborts on these.
class ConfigError : public Error {
public:
    using Error::Error;
};

// An interchange or fixture file that does not match its schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A caller broke an operation's precondition (n = 0, empty stack, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Geometrically or statistically degenerate input (coincident eyes, zero
// rank variance, empty mask).
class DegenerateError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    TransportError(const std::string& what, int status = 0, std::string body = {})
        : Error(what), status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

}  // namespace glean
