#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qsllab {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class OracleInapplicableError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class PositivityError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class InconsistencyError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

// Negative eigenvalues in a propagated hierarchy: the depth is too shallow.
class TruncationError : public PositivityError {
 public:
  using PositivityError::PositivityError;
};

// Quadrature that could not reach its tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved, double requested);
  double achieved() const noexcept { return achieved_; }
  double requested() const noexcept { return requested_; }

 private:
  double achieved_;
  double requested_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_delta);
  double last_delta() const noexcept { return last_delta_; }

 private:
  double last_delta_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::string key);
  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

}  // namespace qsllab
