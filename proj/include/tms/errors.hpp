#pragma once

#include <stdexcept>
#include <string>

namespace tms {

// Argument outside the mathematical domain of an operation (negative force,
// state outside [0,1], non-positive divisor).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Value that cannot be represented by the target device or block.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularNetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tms
