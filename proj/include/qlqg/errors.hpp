#pragma once

#include <stdexcept>
#include <string>

namespace qlqg {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a routine needs an asymptotically stable matrix and gets one that is not.
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RiccatiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleAffineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qlqg
