#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pyrofocus {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used by the CLI for its machine-parsable stderr prefix.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data"; }
};

class InvalidBatchError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "invalid-batch"; }
};

class LabelError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "label"; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Malformed file contents. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }
  const char* kind() const noexcept override { return "format"; }

 private:
  std::uint64_t offset_;
};

/// A referenced input (file, plane, checkpoint) does not exist.
class MissingInputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "missing-input"; }
};

/// Two artifacts that must agree (scaler fingerprints, band sets) do not.
class IncompatibilityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "incompatible"; }
};

}  // namespace pyrofocus
