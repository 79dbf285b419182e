#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Point or vector outside the set where an operation is defined
/// (outside a Funk domain, Legendre transform at the zero vector, ...).
struct DomainError : Error {
  using Error::Error;
};

/// Malformed metric spec or run configuration. `line` is 1-based, 0 when unknown.
struct ConfigError : Error {
  int line = 0;
  explicit ConfigError(const std::string& what, int line_no = 0)
      : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
        line(line_no) {}
};

struct NumericalError : Error {
  using Error::Error;
};

/// Raised by reconstruct_potential when the 1-form fails the closedness gate.
struct NotClosedError : Error {
  double curl = 0.0;
  NotClosedError(const std::string& what, double curl_residual)
      : Error(what), curl(curl_residual) {}
};

}  // namespace finsler
