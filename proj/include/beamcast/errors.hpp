// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace beamcast {

/// Shape or dimension mismatch; `axis()` names the offending axis when one applies.
class DimensionError : public std::invalid_argument {
 public:
  static constexpr std::size_t kNoAxis = static_cast<std::size_t>(-1);

  explicit DimensionError(const std::string& what, std::size_t axis = kNoAxis)
      : std::invalid_argument(axis == kNoAxis ? what
                                              : what + " (axis " + std::to_string(axis) + ")"),
        axis_(axis) {}

  std::size_t axis() const noexcept { return axis_; }

 private:
  std::size_t axis_;
};

/// NaN/Inf in a loss, gradient or solver input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Truncated payload, bad magic or checksum mismatch in a persisted file.
class CorruptFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File cannot be opened, created or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File written by an incompatible schema version or architecture.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beamcast
