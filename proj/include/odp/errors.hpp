#pragma once

#include <stdexcept>
#include <string>

namespace odp {

// All engine failures derive from Error. Validation-type errors map to CLI exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LengthError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Non-finite element found while loading; carries the flat index of the first one.
class NonFiniteError : public ValidationError {
 public:
  NonFiniteError(const std::string& what, std::size_t index)
      : ValidationError(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class AssemblyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LabelRangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LoadError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A method's inputs are missing (no features, no augmented views, too few models).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

}  // namespace odp
