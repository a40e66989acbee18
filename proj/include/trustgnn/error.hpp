#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trustgnn {

// Base for every error the library raises. The CLI maps the subclasses onto
// exit codes (usage 1, data 2, numeric 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Raised by the exhaustive path enumerator when the walk count exceeds its guard.
class OracleOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace trustgnn
