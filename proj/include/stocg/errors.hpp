#pragma once

#include <stdexcept>
#include <string>

namespace stocg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (dimension mismatch, bad input).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate values or other floating-point breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Incompatible or incomplete configuration (wrong T, missing constants).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Too few replications for the requested statistic.
class StatisticalPowerError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Input data that a statistic cannot be computed from.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant failed; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace stocg
