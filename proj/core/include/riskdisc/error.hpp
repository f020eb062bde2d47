#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace riskdisc {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed an out-of-contract argument (threshold outside [0,1],
/// mismatched dimensions, k/floor out of range).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed, inconsistent or insufficient.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A line-oriented input file had a bad line.
class ParseError : public DataError {
 public:
  ParseError(std::string source, std::size_t line, const std::string& reason)
      : DataError(source + ":" + std::to_string(line) + ": " + reason),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Lookup of an id or key that is not present.
class NotFound : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace riskdisc
