#pragma once

#include <stdexcept>
#include <string>

namespace ttnmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid input data (CSV cells, archives, value ranges).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid usage (unknown tags, empty inputs where data is required).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared in an iterate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ttnmf
