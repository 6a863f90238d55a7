#pragma once

#include <stdexcept>
#include <string>

namespace ldp {

/// A caller violated a documented precondition (bad argument, event that
/// is not rare, singular sigma for the closed form, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a finite or certified answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A monotone root search or tilt solve ran past its parameter cap.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// No finite-action path exists for an action problem.
class InfeasibleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ldp
