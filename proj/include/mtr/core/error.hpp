#pragma once

#include <stdexcept>
#include <string>

namespace mtr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (shape, range, degenerate input).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File system or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A serialized document does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A numeric quantity that must be finite was not.
class NumericError : public Error {
 public:
  NumericError(std::string component, const std::string& what)
      : Error(what), component_(std::move(component)) {}
  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

}  // namespace mtr
