#pragma once

#include <stdexcept>
#include <string>

namespace kirchhoff {

/// Failure class carried by every exception the library throws. The CLI maps
/// each category onto its own nonzero exit code.
enum class ErrorCategory {
  invalid_input = 2,
  numerical = 3,
  io = 4,
  verification = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what)
      : Error(ErrorCategory::invalid_input, what) {}
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what)
      : Error(ErrorCategory::numerical, what) {}
};

class IoFailure : public Error {
 public:
  explicit IoFailure(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class VerificationFailure : public Error {
 public:
  explicit VerificationFailure(const std::string& what)
      : Error(ErrorCategory::verification, what) {}
};

#define KIRCHHOFF_REQUIRE(cond, ExceptionType, msg) \
  do {                                              \
    if (!(cond)) throw ExceptionType(msg);          \
  } while (0)

}  // namespace kirchhoff
