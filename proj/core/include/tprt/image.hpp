// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tprt {

/// 8-bit sRGB image, RGB interleaved, top row first.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Linear floating point image, RGB interleaved, top row first.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  [[nodiscard]] Rgb pixel(int x, int y) const {
    const auto i = static_cast<std::size_t>(3 * (y * width + x));
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

[[nodiscard]] double srgb_encode(double linear);
[[nodiscard]] double srgb_decode(double encoded);
/// Linear value scaled by exposure, clamped, sRGB-encoded, and rounded to 8 bits.
[[nodiscard]] std::uint8_t tone_map(double linear, double exposure);

[[nodiscard]] std::vector<std::uint8_t> encode_png(const Image8& image);
void write_png(const Image8& image, const std::filesystem::path& path);
[[nodiscard]] Image8 read_png(const std::filesystem::path& path);
/// PNG decoded and converted from sRGB to linear.
[[nodiscard]] ImageF read_png_linear(const std::filesystem::path& path);

/// Radiance RGBE (.hdr) with the standard -Y +X orientation.
[[nodiscard]] ImageF read_rgbe(const std::filesystem::path& path);
void write_rgbe(const ImageF& image, const std::filesystem::path& path);

}  // namespace tprt
