#pragma once

#include <stdexcept>
#include <string>

namespace wdn {

// Error taxonomy. The CLI maps each family onto a stable exit code:
// ValidationError/ParseError -> 1, IoError -> 2, NumericError -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace wdn
