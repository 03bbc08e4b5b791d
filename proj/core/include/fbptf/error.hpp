#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbptf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied arguments that violate an operation's preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// An object was used in a state that does not support the operation
/// (e.g. predicting from a model without retained samples).
class StateError : public Error {
 public:
  using Error::Error;
};

/// A file did not follow its documented schema.
class SchemaError : public InvalidInput {
 public:
  SchemaError(std::string file, std::size_t line, std::size_t column, const std::string& what)
      : InvalidInput(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        file_(std::move(file)),
        line_(line),
        column_(column) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

/// Base for failures of the numerical machinery itself.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class DecompositionFailure : public NumericalFailure {
 public:
  DecompositionFailure(std::size_t pivot, const std::string& what)
      : NumericalFailure("cholesky failed at pivot " + std::to_string(pivot) + ": " + what), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class SolverBreakdown : public NumericalFailure {
 public:
  SolverBreakdown(int iteration, const std::string& what)
      : NumericalFailure("l21 solver breakdown at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace fbptf
