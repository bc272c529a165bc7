#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvs {

/// Thrown when an argument violates an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine fails (non-convergence, blowup, lost positivity).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Liouvillian kernel does not have dimension one.
class NonUniqueSteadyState : public NumericalError {
 public:
  explicit NonUniqueSteadyState(std::size_t zero_modes)
      : NumericalError("steady state is not unique: kernel dimension " +
                       std::to_string(zero_modes)),
        zero_modes_(zero_modes) {}

  std::size_t zero_modes() const noexcept { return zero_modes_; }

 private:
  std::size_t zero_modes_;
};

}  // namespace nvs
