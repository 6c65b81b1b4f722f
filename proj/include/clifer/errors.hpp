#pragma once

#include <stdexcept>
#include <string>

namespace clifer {

// Base for every error the library raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or configuration (rates out of range, dim < 6, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed argument to an operation (dimension mismatch, empty input).
class InputError : public Error {
 public:
  using Error::Error;
};

// Unknown neuron id, unknown subject.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Operation called on an object in the wrong state.
class StateError : public Error {
 public:
  using Error::Error;
};

// Violation of the class-incremental protocol (mixed labels, unknown class).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// File-level problems: CSV/JSON parse failures, schema mismatch, I/O.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class LabelError : public DataError {
 public:
  using DataError::DataError;
};

// Statistical routine given data it cannot rank (all values tied).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// Dataset cannot be split as requested (a class with a single sequence).
class SplitError : public DataError {
 public:
  using DataError::DataError;
};

// Support corpus lacks a class the translation model needs.
class FitError : public Error {
 public:
  using Error::Error;
};

// Numerical failure while training (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace clifer
