#pragma once

#include <stdexcept>
#include <string>

namespace bernreg {

/// Process exit codes shared by the library error types and the CLI.
enum class ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kConsistencyError = 3,
  kNumericFailure = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }
  virtual const char* kind() const noexcept = 0;

 private:
  ExitCode code_;
};

/// Malformed or out-of-domain input: bad arguments, empty patterns, parse failures.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ExitCode::kInputError, what) {}
  const char* kind() const noexcept override { return "input"; }
};

/// Inputs that are individually valid but disagree with each other (e.g. draw counts).
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what)
      : Error(ExitCode::kConsistencyError, what) {}
  const char* kind() const noexcept override { return "consistency"; }
};

/// A numerical routine failed to converge or produced a broken invariant.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::kNumericFailure, what) {}
  const char* kind() const noexcept override { return "numeric"; }
};

/// Rethrows `error` as the same error category with `context` prepended.
[[noreturn]] inline void rethrow_with_context(const Error& error, const std::string& context) {
  const std::string what = context + ": " + error.what();
  switch (error.code()) {
    case ExitCode::kConsistencyError:
      throw ConsistencyError(what);
    case ExitCode::kNumericFailure:
      throw NumericError(what);
    default:
      throw InputError(what);
  }
}

}  // namespace bernreg
