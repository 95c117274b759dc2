// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tprt {

inline constexpr double kPi = std::numbers::pi;
inline constexpr int kChannels = 3;

using Vec3 = Eigen::Vector3d;
using Rgb = std::array<double, kChannels>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (mesh files, configs, commands).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or violated precondition that the caller can recover from.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Problems reading or writing files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A binary container is short, corrupt, or of the wrong version.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

/// A container was built for a different mesh.
class HashMismatch : public Error {
 public:
  using Error::Error;
};

/// Sizes of two collaborating objects disagree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

inline constexpr bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace tprt
