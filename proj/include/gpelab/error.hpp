#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpelab {

// Coarse classification used by the CLI to print a machine-parsable category.
enum class ErrorCategory {
  invalid_argument,
  parse,
  integration,
  analysis,
  io,
};

inline std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return "invalid_argument";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::integration: return "integration";
    case ErrorCategory::analysis: return "analysis";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Thrown when a propagation breaches a health tolerance or produces NaN.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time_reached, double drift)
      : Error(ErrorCategory::integration, what), time_(time_reached), drift_(drift) {}

  double time_reached() const noexcept { return time_; }
  double drift() const noexcept { return drift_; }

 private:
  double time_;
  double drift_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) { throw Error(c, msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorCategory::invalid_argument, msg);
}

}  // namespace gpelab
