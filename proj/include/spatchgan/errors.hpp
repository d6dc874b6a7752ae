#pragma once

#include <stdexcept>
#include <string>

namespace spatchgan {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration (bad field value, indivisible input size, unknown key).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor/image shape does not match what the callee was built for.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Dataset / filesystem problems (missing directory, empty dataset, undecodable file).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericsError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint container errors, with a machine-checkable kind.
class CheckpointError : public Error {
 public:
  enum class Kind {
    BadMagic,
    VersionMismatch,
    MissingBlock,
    ExtraBlock,
    SizeMismatch,
    CorruptLength,
  };

  CheckpointError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace spatchgan
