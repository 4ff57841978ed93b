#pragma once

#include <stdexcept>
#include <string>

namespace netgnn {

// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A referenced input file does not exist or cannot be opened (exit code 2).
class MissingFileError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed or inconsistent data: schema mismatch, corrupt file,
// invariant violation in inputs (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint written by an incompatible format version (exit code 5).
class VersionError : public DataError {
 public:
  using DataError::DataError;
};

// NaN/Inf during a forward pass or training (exit code 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Graph-structure problems: duplicate links, unreachable destinations,
// disconnection after failures.
class GraphError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace netgnn
