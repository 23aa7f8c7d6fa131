#pragma once

#include <stdexcept>
#include <string>

namespace wgqed {

// Base class for all library failures. Subclasses map onto the CLI exit-code
// contract: ParameterError/ConfigError -> 2, NoSolutionError -> 3, rest -> 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Arguments outside the declared domain (nonpositive M, bad cell counts, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// A stated precondition of an operation does not hold (e.g. kbar*d != n*pi).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A numerical procedure failed to meet its tolerance; the message carries
// diagnostics (achieved error, subdivision count, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

// A truncated expansion cannot reach the requested tolerance. Carries an
// estimate of the truncation order that would suffice.
class TruncationError : public Error {
public:
    TruncationError(const std::string& msg, int required)
        : Error(msg), required_terms(required) {}
    int required_terms;
};

// A well-posed query with a documented empty answer (no root in bracket).
class NoSolutionError : public Error {
public:
    using Error::Error;
};

// Malformed or unknown-key configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace wgqed
