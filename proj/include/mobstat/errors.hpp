#pragma once

#include <stdexcept>
#include <string>

namespace mobstat {

// Maps onto the CLI exit codes: usage 1, data 2, numerical 3.
enum class ErrorKind { usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Input files or records that violate a schema or invariant.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class SchemaError : public DataError {
 public:
  SchemaError(const std::string& what, std::string column)
      : DataError(what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Too few observations for the requested model.
class ObservationsError : public DataError {
 public:
  ObservationsError(const std::string& what, std::size_t minimum)
      : DataError(what), minimum_(minimum) {}
  std::size_t minimum() const noexcept { return minimum_; }

 private:
  std::size_t minimum_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class SingularDesignError : public NumericalError {
 public:
  SingularDesignError(const std::string& what, std::size_t column)
      : NumericalError(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double gradient_norm)
      : NumericalError(what), gradient_norm_(gradient_norm) {}
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

}  // namespace mobstat
