#ifndef ASTRAS_ERRORS_HPP
#define ASTRAS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace astras {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (geometry, hyperparameters).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A rendered quantity leaves the physical sensor; carries the offending angle.
class RangeError : public Error {
public:
    RangeError(const std::string& what, double beta_deg)
        : Error(what), beta_deg_(beta_deg) {}
    double beta_deg() const noexcept { return beta_deg_; }

private:
    double beta_deg_;
};

/// Malformed input data (non-finite features, size mismatches).
class InputError : public Error {
public:
    using Error::Error;
};

/// A regression or optimisation failed to produce a usable fit.
class FitError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public FitError {
public:
    InsufficientDataError(const std::string& what, int sector)
        : FitError(what), sector_(sector) {}
    int sector() const noexcept { return sector_; }

private:
    int sector_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Correlation has no defined peak (constant inputs).
class UndefinedShiftError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Persistence: bad magic, truncated payload, dangling references.
class FormatError : public Error {
public:
    using Error::Error;
};

class VersionError : public FormatError {
public:
    VersionError(const std::string& what, unsigned found, unsigned expected)
        : FormatError(what), found_(found), expected_(expected) {}
    unsigned found() const noexcept { return found_; }
    unsigned expected() const noexcept { return expected_; }

private:
    unsigned found_;
    unsigned expected_;
};

/// An absolute measurement that cannot be trusted must not be reported.
class MeasurementInvalid : public Error {
public:
    using Error::Error;
};

} // namespace astras

#endif // ASTRAS_ERRORS_HPP
