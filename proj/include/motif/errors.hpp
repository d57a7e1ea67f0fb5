#pragma once

#include <stdexcept>
#include <string>

namespace motif {

// Each error family maps to a distinct CLI exit code (see cli.hpp).

/// Invalid or out-of-range configuration value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with input data: unreadable files, malformed manifests or
/// stores, missing ids, dimension mismatches between data and model.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or other numerical breakdown during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes that do not fit together.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace motif
