#pragma once

#include <stdexcept>
#include <string>

namespace l3fp {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A stochastic step produced an unusable result; the caller should retry
/// with fresh random draws.
class RegenerationRequired : public Error {
 public:
  using Error::Error;
};

/// Retries were exhausted or an estimator had no usable model.
class GenerationFailure : public Error {
 public:
  using Error::Error;
};

class EstimationFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the file name and 1-based line number.
class FormatError : public Error {
 public:
  FormatError(std::string file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  int line() const noexcept { return line_; }

 private:
  std::string file_;
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace l3fp
