// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace plantdet {

/// Base class for every error the library raises.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor shape or dimension mismatch.
struct DimensionError : Error {
  using Error::Error;
};

/// Violated API precondition (non-scalar loss, inverted box, ...).
struct ContractError : Error {
  using Error::Error;
};

/// Invalid run or model configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed input data (label files, images, splits).
struct DataError : Error {
  using Error::Error;
};

/// Broken binary file (checkpoint magic, offsets, truncation).
struct FormatError : Error {
  using Error::Error;
};

/// NaN or Inf produced by a numeric kernel.
struct NumericError : Error {
  using Error::Error;
};

/// Filesystem failure (unreadable or unwritable path).
struct IoError : Error {
  using Error::Error;
};

}  // namespace plantdet
