#pragma once

#include <stdexcept>
#include <string>

namespace cscn {

// Shape or size disagreement between tensors/matrices.
class DimensionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value (rate out of range, even kernel, ...).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File parsing / serialization failure.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. a backward pass fed a cache from a different forward.
class ContractError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace cscn
