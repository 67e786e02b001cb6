#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace idm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid manifold, sampler or experiment configuration.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (negative time,
/// nonpositive value in a log-log fit, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Nearest-point projection is undefined or not unique.
class DegenerateProjectionError : public Error {
 public:
  using Error::Error;
};

class InvalidTangentError : public Error {
 public:
  using Error::Error;
};

/// Requested combination is not implemented (e.g. a quadrature grid on SO(m)).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state while integrating the reverse ODE.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Sinkhorn did not reach the marginal tolerance within the iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double marginal_violation)
      : Error(what + " (marginal violation " + std::to_string(marginal_violation) + ")"),
        violation_(marginal_violation) {}

  double marginal_violation() const noexcept { return violation_; }

 private:
  double violation_;
};

}  // namespace idm
