#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtmrc {

// Process exit codes used by the command-line tool. Every library error maps
// onto one of them so scripts can branch on the failure class.
enum class ExitCode : int {
  ok = 0,
  shape = 2,
  not_invertible = 3,
  kernel_invalid = 4,
  numerical = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Grid / state-count mismatches between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::shape; }
};

// Out-of-range indices, negative powers and similar caller mistakes.
class ArgumentError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::shape; }
};

// Malformed JSON input; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::shape; }
};

class NotInvertibleError : public Error {
 public:
  explicit NotInvertibleError(const std::string& detail)
      : Error("not convolutionally invertible: " + detail) {}
  ExitCode exit_code() const noexcept override { return ExitCode::not_invertible; }
};

// Kernel conditions: nonnegativity, row mass, no mass at the origin.
enum class KernelCondition { nonnegative, row_mass, origin_mass };

const char* to_string(KernelCondition c) noexcept;

class KernelValidationError : public Error {
 public:
  KernelValidationError(KernelCondition condition, std::size_t state, const std::string& detail);
  ExitCode exit_code() const noexcept override { return ExitCode::kernel_invalid; }
  KernelCondition condition() const noexcept { return condition_; }
  std::size_t state() const noexcept { return state_; }

 private:
  KernelCondition condition_;
  std::size_t state_;
};

class NotIrreducibleError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

}  // namespace mtmrc
