#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace s3gd {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Input that parses but violates a domain constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Derived state (snapshot, propagation cache) used against data it was not built for.
class StaleStateError : public Error {
 public:
  using Error::Error;
};

}  // namespace s3gd
