#pragma once

#include <stdexcept>
#include <string>

namespace sparsepr {

// Bad arguments, malformed configs and files. The CLI maps these to exit status 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for everything the CLI reports as a numerical failure (exit status 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The model is not identifiable at the given point (zero signal).
class SingularModel : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// An estimate that inference cannot proceed from (zero TWF output, tau^2 <= 0, ...).
class DegenerateEstimate : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The gradient iteration produced a non-finite iterate.
class Diverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sparsepr
