#pragma once

#include <stdexcept>
#include <string>

namespace mtf {

/// Raised when a caller breaks an operation's precondition (shape mismatch,
/// out-of-range index, asymmetric input where symmetry is required, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a Gram matrix cannot be factorized even after regularization.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace mtf
