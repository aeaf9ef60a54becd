#pragma once

#include <stdexcept>
#include <string>

namespace feasplan {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Raised when a numeric procedure produces NaN/Inf; the message carries the
// diagnostic context (step, timestep, ids).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace feasplan
