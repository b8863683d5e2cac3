#pragma once

#include <stdexcept>
#include <string>

namespace eegfuse {

// Corrupt or malformed on-disk data (bad magic, checksum mismatch, truncation).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed data that violates a domain invariant (ratings out of range,
// non-finite samples, single-class training sets).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Impossible or inconsistent configuration (k out of range, band above
// Nyquist, head count not dividing the model width).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failures.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace eegfuse
