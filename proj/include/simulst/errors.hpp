#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simulst {

/// Base of every exception thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on a function argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A frame index or span falls outside the timeline.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// A value-object invariant would be broken (e.g. a commit log reordering).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The trace backend was asked for a span it has no record of.
class MissingRecordError : public Error {
 public:
  using Error::Error;
};

}  // namespace simulst
