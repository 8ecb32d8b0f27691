#pragma once

#include <stdexcept>
#include <string>

namespace pklab {

// Base for everything the library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments / preconditions (CLI exit code 2).
struct DomainError : Error {
    using Error::Error;
};

// Numeric failures: truncation, precision, table exhaustion (CLI exit code 3).
struct NumericError : Error {
    using Error::Error;
};

struct TruncationError : NumericError {
    double best_bound_log;  // log of the best certified absolute bound reached
    TruncationError(const std::string& msg, double bound_log)
        : NumericError(msg), best_bound_log(bound_log) {}
};

struct TableTooShortError : NumericError {
    long long n_reached;
    TableTooShortError(const std::string& msg, long long n)
        : NumericError(msg), n_reached(n) {}
};

struct PrecisionError : NumericError {
    using NumericError::NumericError;
};

struct DegenerateNormError : NumericError {
    using NumericError::NumericError;
};

struct AliasingError : NumericError {
    using NumericError::NumericError;
};

// Certified check failed (CLI exit code 4).
struct CertificationError : Error {
    using Error::Error;
};

}  // namespace pklab
