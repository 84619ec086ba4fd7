#ifndef GRPOLAB_ERRORS_HPP_
#define GRPOLAB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace grpolab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// rho+ + rho- >= 1: the corruption channel loses all signal and cannot be
// inverted. Callers should abort or re-estimate the rates.
struct InversionError : Error {
  using Error::Error;
};

// Fewer samples than the estimator needs (e.g. group variance with n < 2).
struct DegenerateSample : Error {
  using Error::Error;
};

// An estimation set is missing a whole class (no positives or no negatives).
struct InsufficientData : Error {
  using Error::Error;
};

// A normalization divisor (sigma, sigma-tilde or M) is zero or negative.
struct DegenerateDivisor : Error {
  using Error::Error;
};

// Fixed-point solve exhausted its iteration budget; message carries the last
// iterate and residual.
struct NoConvergence : Error {
  NoConvergence(const std::string& what, double last_iterate, double residual)
      : Error(what), last_iterate(last_iterate), residual(residual) {}
  double last_iterate;
  double residual;
};

// Experiment configuration parse or validation failure.
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem failure while reading or writing artifacts.
struct IoError : Error {
  using Error::Error;
};

}  // namespace grpolab

#endif  // GRPOLAB_ERRORS_HPP_
