#pragma once

#include <stdexcept>
#include <string>

namespace cgh {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or violated precondition on user-supplied parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation produced non-finite values or violated a numerical guard.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cgh
