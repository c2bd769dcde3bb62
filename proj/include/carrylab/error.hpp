#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace carrylab {

// Argument outside the mathematical domain of an operation (bad digit, base
// mismatch, non-unit, table outside the enumeration, ...).
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested computation exceeds the enumeration/storage limits.
class resource_limit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration (unknown carry id, malformed kernel, missing report).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value during a forward pass or training.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace carrylab
