#pragma once

#include <stdexcept>
#include <string>

namespace flowsplat {

// Root of the library's exception hierarchy. The CLI maps ParseError,
// ValidationError and UsageError to exit code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, singular evaluations, integration blow-ups.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowsplat
