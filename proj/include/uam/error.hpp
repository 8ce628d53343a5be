#pragma once

#include <stdexcept>
#include <string>

namespace uam {

// Exit codes used by the command-line driver.
enum class ExitCode : int { kOk = 0, kValidation = 1, kInfeasible = 2, kInternal = 3 };

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept { return ExitCode::kInternal; }
};

// Bad input: malformed files, out-of-range indices, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kValidation; }
};

class InvalidIndexError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutOfBoundsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IngestionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Aircraft or airspace limits that make a request impossible before any search.
class ConstraintError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OverloadError : public ConstraintError {
 public:
  using ConstraintError::ConstraintError;
};

// Plan ingestion found a flight that breaks a turnaround or timing regulation.
class PlanError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A well-formed request that has no solution.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::size_t explored = 0)
      : Error(what), explored_(explored) {}
  ExitCode exit_code() const noexcept override { return ExitCode::kInfeasible; }
  std::size_t explored() const noexcept { return explored_; }

 private:
  std::size_t explored_;
};

class RangeError : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

class OptimizationError : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace uam
