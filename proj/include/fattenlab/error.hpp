#pragma once

#include <stdexcept>
#include <string>

namespace fattenlab {

/// Bad input: out-of-range parameters, mismatched grids, malformed configs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced non-finite values or otherwise could not proceed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace fattenlab
