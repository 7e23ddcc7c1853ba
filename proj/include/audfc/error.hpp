#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace audfc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV rows, timestamps, target strings, store files).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value or attribute that the schema does not know about.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Invalid mining / scenario / estimator configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Windows or horizons that do not fall on whole hours.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Brute-force search space over the allowed limit.
class GuardError : public Error {
 public:
  using Error::Error;
};

/// Correlation matrix that cannot be factorized even with jitter.
class InvalidCorrelation : public Error {
 public:
  using Error::Error;
};

/// MAPE over a vector whose actual values are all zero.
class UndefinedMape : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace audfc
