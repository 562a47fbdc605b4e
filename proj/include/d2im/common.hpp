#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace d2im {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raised when a computation cannot proceed (bad input data, degenerate geometry, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for caller mistakes: violated preconditions, invalid configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// OBJ / binary parse failure. `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw UsageError(message);
  }
}

/// Sampling domain shared by every field in the library.
inline constexpr double kBoxMin = -0.5;
inline constexpr double kBoxMax = 0.5;

} // namespace d2im
