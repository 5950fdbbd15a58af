#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fitzloss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The target y is not in dom(Omega) (the mathematical value would be +inf).
class InfeasibleTargetError : public DomainError {
 public:
  using DomainError::DomainError;
};

class DimensionMismatchError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A bracket never straddled a sign change, even after expansion.
class NoRootError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of iterations. Carries the best iterate found.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_iterate)
      : Error(what), best_iterate_(best_iterate) {}
  double best_iterate() const noexcept { return best_iterate_; }

 private:
  double best_iterate_;
};

/// A function evaluation returned a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t coordinate)
      : Error(what), coordinate_(coordinate) {}
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  /// 1-based line number, 0 when not attached to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace fitzloss
