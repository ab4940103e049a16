#pragma once

#include <stdexcept>
#include <string>

namespace foilflow {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError (and ShapeError) -> 2, IoError/FormatError -> 3, NumericError -> 4.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension or layout mismatch between values that should agree.
struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file was readable but its contents do not match the expected schema.
struct FormatError : IoError {
  using IoError::IoError;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace foilflow
