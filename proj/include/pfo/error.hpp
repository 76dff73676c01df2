#pragma once

#include <stdexcept>
#include <string>

namespace pfo {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV rows, price vectors, shapes of user data).
class DataError : public Error {
public:
    using Error::Error;
};

/// A CSV row that failed validation. Carries the 1-based line number.
class RowError : public DataError {
public:
    RowError(std::size_t line, std::string detail, const std::string& source = {})
        : DataError((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
          line_(line),
          detail_(std::move(detail)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

/// Invalid run configuration; `field` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Violated numeric precondition (zero volatility, degenerate scaler, shape mismatch, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace pfo

namespace pfo {

/// Caller passed arguments outside an operation's domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Remote price retrieval failures, kept distinct so callers can react differently.
class NetworkError : public DataError {
public:
    using DataError::DataError;
};

class UnknownTickerError : public DataError {
public:
    using DataError::DataError;
};

class EmptyResponseError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace pfo
