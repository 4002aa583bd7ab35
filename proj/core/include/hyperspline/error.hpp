#pragma once

#include <stdexcept>
#include <string>

namespace hyperspline {

/// Invalid arguments, malformed files, or points outside a model's domain.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Singular systems, rank deficiency that cannot be repaired, or solver
/// iteration caps.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hyperspline
