#pragma once

#include <stdexcept>
#include <string>

namespace tpl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition or type invariant.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Scenario / scan text could not be parsed.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// The adaptive integrator could not advance (step underflow or a
/// non-finite derivative).
class IntegrationFailure : public Error {
public:
    IntegrationFailure(double t_us, const std::string& what)
        : Error(what + " at t = " + std::to_string(t_us) + " us"), t_us_(t_us) {}
    double time_us() const noexcept { return t_us_; }

private:
    double t_us_;
};

/// Calibration targets cannot be met by the two-root gain structure.
class CalibrationInfeasible : public Error {
public:
    CalibrationInfeasible(const std::string& what, double lo, double hi)
        : Error(what), lo_(lo), hi_(hi) {}
    /// Feasible interval of the quantity that was out of range.
    double feasible_lo() const noexcept { return lo_; }
    double feasible_hi() const noexcept { return hi_; }

private:
    double lo_, hi_;
};

}  // namespace tpl
