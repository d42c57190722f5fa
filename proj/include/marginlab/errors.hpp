#pragma once

#include <stdexcept>
#include <string>

namespace marginlab {

// Enumeration would exceed the configured candidate cap.
class resource_limit_error : public std::runtime_error {
 public:
  explicit resource_limit_error(const std::string& what)
      : std::runtime_error(what) {}
};

// A solver produced NaN/Inf or failed to converge where convergence is part
// of the contract.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what)
      : std::runtime_error(what) {}
};

// Combination of constraint set and exponent that has no exact projection
// (e.g. Euclidean ball with q != 2). Rejected rather than approximated.
class unsupported_combination_error : public std::invalid_argument {
 public:
  explicit unsupported_combination_error(const std::string& what)
      : std::invalid_argument(what) {}
};

// Feasible set has no finite enumeration (the sphere).
class not_enumerable_error : public std::invalid_argument {
 public:
  explicit not_enumerable_error(const std::string& what)
      : std::invalid_argument(what) {}
};

}  // namespace marginlab
