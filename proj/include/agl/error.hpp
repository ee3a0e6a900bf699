#pragma once

#include <stdexcept>
#include <string>

namespace agl {

/// Raised when a caller breaks an operation's precondition (shape mismatch,
/// invalid hyperparameter, incompatible loss/task, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when training produces a non-finite gradient or objective.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what, int epoch = -1)
      : std::runtime_error(what), epoch_(epoch) {}

  /// Epoch at which the objective became non-finite, or -1 if unknown.
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Malformed input file; carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace detail
}  // namespace agl
