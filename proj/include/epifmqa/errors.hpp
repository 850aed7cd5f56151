#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace epifmqa {

/// Thrown when a caller breaks an operation's precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// No penetrance scale reaches the requested heritability.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double max_h2)
      : std::runtime_error(what), max_h2_(max_h2) {}
  double max_achievable_h2() const noexcept { return max_h2_; }

 private:
  double max_h2_;
};

/// Work would exceed a configured size limit (enumeration caps, brute force).
class RefusalError : public std::runtime_error {
 public:
  RefusalError(const std::string& what, std::uint64_t required)
      : std::runtime_error(what), required_(required) {}
  std::uint64_t required() const noexcept { return required_; }

 private:
  std::uint64_t required_;
};

/// Rejection sampling ran out of draws.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace epifmqa
