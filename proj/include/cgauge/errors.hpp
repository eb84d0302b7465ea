#pragma once

#include <stdexcept>
#include <string>

namespace cgauge {

/// Base class of the library errors; violated preconditions throw std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A linear solve did not reach its residual tolerance.
class SolverDiverged : public Error {
 public:
  using Error::Error;
};

/// No cell center lies inside the requested ball.
class EmptyBall : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& reason)
      : Error("config key '" + key + "': " + reason), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Malformed or inconsistent field file.
class FieldFormatError : public Error {
 public:
  FieldFormatError(std::string file, std::size_t byte_offset, const std::string& reason)
      : Error(file + " (byte " + std::to_string(byte_offset) + "): " + reason),
        file_(std::move(file)),
        offset_(byte_offset) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::size_t offset_;
};

}  // namespace cgauge
