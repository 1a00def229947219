#ifndef UQ_ERRORS_HPP
#define UQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace uq {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameters, goal parameterizations, or arguments outside
// their mathematical domain (ell <= 0, p outside [0,1], c < 0, ...).
struct ParameterError : Error {
  using Error::Error;
};

// Mismatched vector/matrix/grid dimensions.
struct DimensionError : Error {
  using Error::Error;
};

// Operation requires a state the object is not in (e.g. sampling from an
// unfactorized model).
struct StateError : Error {
  using Error::Error;
};

// Covariance not factorizable even at the maximum jitter, or a zero pivot
// in a direct solve.
struct SingularError : Error {
  using Error::Error;
};

// A numerical result came out non-finite or an optimizer could not produce
// a usable answer.
struct ComputationError : Error {
  using Error::Error;
};

// Malformed input data; carries a 1-based line number when known.
struct ParseError : Error {
  explicit ParseError(const std::string& what, long line = -1)
      : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_number(line) {}
  long line_number;
};

// Invalid or inconsistent run configuration; message names the field path.
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem failures; message names the path.
struct IoError : Error {
  using Error::Error;
};

}  // namespace uq

#endif  // UQ_ERRORS_HPP
