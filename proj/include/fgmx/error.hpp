#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fgmx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. Carries the byte offset of the failure and the
/// set of tokens that would have been accepted there.
class ParseError : public Error {
public:
    ParseError(std::string what, std::size_t offset, std::vector<std::string> expected = {})
        : Error(std::move(what)), offset_(offset), expected_(std::move(expected)) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

/// A function was evaluated outside its domain (ln of a non-positive value,
/// 0 raised to a negative power, ...). `where` names the offending piece.
class DomainError : public Error {
public:
    DomainError(std::string what, std::string where)
        : Error(std::move(what)), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A computation produced a non-finite or otherwise unusable number.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Two routes that must agree did not; usually an invalid spec slipped through.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(std::string what, double estimate, double error_bound)
        : Error(std::move(what)), estimate_(estimate), error_bound_(error_bound) {}

    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double estimate_;
    double error_bound_;
};

/// A target value lies outside the range a family can attain.
class RangeError : public Error {
public:
    RangeError(std::string what, double lo, double hi) : Error(std::move(what)), lo_(lo), hi_(hi) {}

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

/// The root-finding bracket does not contain the target value.
class BracketError : public Error {
public:
    using Error::Error;
};

/// A document that parsed but does not have the expected shape.
class SchemaError : public Error {
public:
    using Error::Error;
};

} // namespace fgmx
