#pragma once

#include <stdexcept>
#include <string>

namespace tap {

// Error taxonomy shared by all modules. Everything derives from Error so
// callers can catch the whole family at the CLI boundary.

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes do not line up (matmul inner dims, bias width, ...).
class ShapeError : public Error {
public:
  using Error::Error;
};

// Non-finite values where finite inputs are required.
class NumericError : public Error {
public:
  using Error::Error;
};

// Missing parameter, invalid mode, bad layer chain, unknown key.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Violated operation precondition (index out of range, non-scalar loss, ...).
class ContractError : public Error {
public:
  using Error::Error;
};

// Bad data content (empty cloud, label mismatch).
class DataError : public Error {
public:
  using Error::Error;
};

// Malformed on-disk file. Carries the byte offset where parsing failed.
class FormatError : public Error {
public:
  FormatError(const std::string& msg, std::size_t byte_offset)
      : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

// Rotation matrix fails orthonormality / determinant checks.
class PoseError : public Error {
public:
  using Error::Error;
};

// Filesystem-level failures (open, read, write).
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace tap
