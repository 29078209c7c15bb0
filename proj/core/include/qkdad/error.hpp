#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qkdad {

/// Base class for every error thrown by the toolkit. Callers that want a
/// single catch site can catch this; CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension disagreement between inputs (vector lengths, matrix shapes).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or architecture.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Empty or otherwise unusable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite arithmetic is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed model container (bad magic, unknown version, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A forward cache reused against parameters it was not built from.
class CacheError : public Error {
 public:
  using Error::Error;
};

/// Malformed-line budget exceeded while consuming a stream.
class StreamError : public Error {
 public:
  using Error::Error;
};

/// Text parse failure; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qkdad
