#pragma once

#include <stdexcept>
#include <string>

namespace asdopt {

// Caller supplied a value outside an operation's domain.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A design whose per-arm stage sizes cannot be made positive.
class InfeasibleDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric vector that does not correspond to a valid design point.
class DecodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Kernel matrix could not be factorized even after jitter escalation.
class SurrogateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asdopt
