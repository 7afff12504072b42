#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace al3 {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: wrong lengths, violated preconditions, bad parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Malformed file contents; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Nonpositive pivot or singular factor; `row` identifies where it happened.
class FactorizationError : public Error {
 public:
  FactorizationError(std::size_t row, const std::string& what)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  [[nodiscard]] std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// An iterative dense kernel ran out of its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw InvalidInput(msg);
}

inline void require_size(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected) {
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(expected) +
                            ", got " + std::to_string(got));
  }
}

}  // namespace detail
}  // namespace al3
