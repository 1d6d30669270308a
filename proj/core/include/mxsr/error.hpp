#pragma once

#include <stdexcept>
#include <string>

namespace mxsr {

// Base of every error raised by the library. Subclasses name the failure
// category so callers (and tests) can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or image extents disagree with what an operation needs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Channel count incompatible with a channel-splitting operation.
class ArityError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or unsupported parameters (padding, crop size, flags...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Architecture description that cannot be assembled.
class SpecificationError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong state (backward without forward, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

// Dataset content problems: empty sets, degenerate images, divergence.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace mxsr
