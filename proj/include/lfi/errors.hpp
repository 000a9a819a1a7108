#pragma once

#include <stdexcept>
#include <string>

namespace lfi {

// Caller broke a documented precondition (wrong shapes, non-scalar grad
// output, empty batch, ...).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Bad user-facing configuration: unknown key, type mismatch, missing file.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical divergence (non-finite parameters or state). Exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lfi
