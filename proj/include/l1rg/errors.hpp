#pragma once

#include <stdexcept>
#include <string>

namespace l1rg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

/// Raised when a matrix expected to be Hurwitz (or Schur) is not.
class StabilityError : public Error {
public:
    using Error::Error;
};

/// Floating point breakdown: singular factor, quadrature that did not converge, ...
class NumericError : public Error {
public:
    using Error::Error;
};

/// A design stage could not satisfy one of its conditions.
///
/// `condition` names the violated inequality; `knob` names the parameter a
/// user would turn to recover (bandwidth, gamma1, Td, ...).
class DesignError : public Error {
public:
    DesignError(std::string condition, std::string knob, const std::string& detail)
        : Error(condition + ": " + detail + " (try: " + knob + ")"),
          condition_(std::move(condition)),
          knob_(std::move(knob)) {}

    const std::string& condition() const noexcept { return condition_; }
    const std::string& knob() const noexcept { return knob_; }

private:
    std::string condition_;
    std::string knob_;
};

/// The maximal output admissible set was not finitely determined within k_max.
class DeterminationError : public Error {
public:
    using Error::Error;
};

/// The governor precondition (command, state) in the admissible set was lost.
class InvarianceLoss : public Error {
public:
    using Error::Error;
};

/// A simulation produced a non-finite state.
class DivergenceError : public Error {
public:
    DivergenceError(double last_good_time, const std::string& what)
        : Error(what + " (last finite state at t = " + std::to_string(last_good_time) + ")"),
          last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

}  // namespace l1rg
