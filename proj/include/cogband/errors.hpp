#pragma once

#include <stdexcept>
#include <string>

namespace cogband {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidTimingError : public Error {
public:
    using Error::Error;
};

class PrimaryUnstableError : public Error {
public:
    using Error::Error;
};

class InvalidBandError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class EnumerationLimitError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class ConstraintViolationError : public Error {
public:
    using Error::Error;
};

class DecompositionError : public Error {
public:
    DecompositionError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class HorizonTooShortError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// Solver hit an iteration limit or lost numerical consistency.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cogband
