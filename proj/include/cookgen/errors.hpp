#pragma once

#include <stdexcept>
#include <string>

namespace cookgen {

// Precondition violated by the caller (bad sizes, out-of-range arguments).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor or image shapes disagree.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown key: context pair, layer id, tensor name.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed file on disk (session directory, weight archive, config).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Degenerate numeric state: zero-norm embedding, non-finite loss.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation not allowed in the object's current state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Missing or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cookgen
