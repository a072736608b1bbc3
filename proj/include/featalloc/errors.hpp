#pragma once

#include <stdexcept>
#include <string>

namespace featalloc {

/// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by exhaustive kernels when the problem is too large to enumerate.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when both one-step extensions of a particle carry zero mass.
class DegenerateSupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed configuration or input files.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace featalloc
