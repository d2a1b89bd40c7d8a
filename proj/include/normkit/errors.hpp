#pragma once

#include <stdexcept>
#include <string>

namespace normkit {

/// Configuration violates a feasibility bound (Table-style range checks,
/// empty constraint sets). CLI maps this to exit code 2.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-convergence, non-SPD input, NaN in a gradient.
/// CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace normkit
