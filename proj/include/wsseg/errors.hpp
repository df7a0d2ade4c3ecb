#pragma once

#include <stdexcept>
#include <string>

namespace wsseg {

// Shape/argument violations: wrong rank, mismatched dims, out-of-range knobs.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed or unreadable on-disk data (bad magic, truncation, bad header fields).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A computation left the finite domain (divergence, non-finite intermediate).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pooling mask came out empty or full where the loss needs both sides populated.
struct MaskError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace wsseg
