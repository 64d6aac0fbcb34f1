#pragma once

#include <stdexcept>
#include <string>

namespace perlat {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external data: CSV headers, non-finite coordinates, points
// outside the declared window.
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or preconditions (bad model, empty grid, window too
// small for the requested estimator, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not deliver a valid answer (indefinite
// covariance, degenerate lattice, enumeration too large, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace perlat
