#pragma once

#include <stdexcept>
#include <string>

namespace ctmfg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid model, grid or solver parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Failures that originate in the numerics rather than in the inputs.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A forward step pushed a probability below the cleanup threshold.
class SimplexViolation : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace ctmfg
