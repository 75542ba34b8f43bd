#pragma once

#include <stdexcept>
#include <string>

namespace kreinlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input describes an empty or otherwise unusable domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Coefficient fields violate ellipticity/sign requirements or coverage.
class CoefficientError : public Error {
public:
    using Error::Error;
};

/// Eigen- or linear-solver failure.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace kreinlab
