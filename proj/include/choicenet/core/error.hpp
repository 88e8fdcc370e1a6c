#pragma once

#include <stdexcept>
#include <string>

namespace choicenet {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that breaks a ChoiceDataset invariant.
class DatasetError : public Error {
 public:
  using Error::Error;
};

// A violated internal invariant (e.g. a model producing a non-normalized
// probability vector).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Shapes or dimensions that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Requested operation is not supported for the given input.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (CSV, LP, JSON). Carries the 1-based line if known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace choicenet
