#pragma once

#include <stdexcept>

namespace shiftlab {

// Dimension/shape disagreements; messages name the offending axes.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Out-of-range labels or indices.
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse (backward twice, missing grads, ...).
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument values (empty batches, degenerate splits, ...).
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed binary files; messages name the byte offset where parsing failed.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown algorithm, unknown JSON keys, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value produced where finite math is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace shiftlab
