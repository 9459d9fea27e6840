#pragma once

#include <stdexcept>
#include <string>

namespace capa {

// Precondition violations (bad shapes, non-positive sizes, unknown names)
// are reported as std::invalid_argument. The types below cover failures that
// happen while doing numerics on otherwise valid input.

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A finite-rank kernel correction (I + G) could not be inverted.
class SingularKernelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace capa
