#pragma once

#include <stdexcept>
#include <string>

namespace ces {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand has a dimension the operation does not support.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix or parameter set violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Measurement data cannot support the requested analysis
/// (empty records, missing settings, insufficient basis coverage).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Configuration file missing, malformed, or out of range. The message
/// starts with the offending field path, e.g. "noise.v0: ...".
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ces
