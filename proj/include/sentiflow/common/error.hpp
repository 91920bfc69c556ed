#pragma once

#include <stdexcept>
#include <string>

namespace sentiflow {

// Base for every error raised by the library. Stage-level code catches this
// and prefixes the stage name before reporting.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Network or remote-service failure; safe to retry.
class TransportError : public Error {
public:
    TransportError(std::string source, const std::string& what)
        : Error(source + ": " + what), source_(std::move(source)) {}
    const std::string& source() const noexcept { return source_; }

private:
    std::string source_;
};

// A data source returned nothing for the requested key and range.
class NoDataError : public Error {
public:
    using Error::Error;
};

// Malformed file contents or a schema mismatch while loading an artifact.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace sentiflow
