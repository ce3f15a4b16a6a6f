#pragma once

#include <stdexcept>
#include <string>

namespace asp {

// Raised for malformed configuration (grid sizes, unknown keys, bad counts).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a WorldState, Goal or Observation breaks its invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a forward/backward pass or loss produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised on malformed checkpoint or state serialization.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asp
