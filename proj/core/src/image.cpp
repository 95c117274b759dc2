// SPDX-License-Identifier: Apache-2.0

#include "tprt/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace tprt {

double srgb_encode(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

std::uint8_t tone_map(double linear, double exposure) {
  const double v = srgb_encode(linear * exposure);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

namespace {

void png_error_fn(png_structp, png_const_charp msg) { throw IoError(std::string("png: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image8& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.rgb.size() != static_cast<std::size_t>(3 * image.width * image.height))
    throw InvalidArgument("image buffer does not match its dimensions");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_write_struct(&p, &i); }
  } guard{png, info};
  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + static_cast<std::size_t>(3 * y * image.width)));
  png_write_end(png, nullptr);
  return out;
}

void write_png(const Image8& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Image8 read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!fp) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& p;
    png_infop& i;
    ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
  } guard{png, info};
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  Image8 img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(3 * img.width))
    throw IoError("unsupported PNG layout in " + path.string());
  img.rgb.resize(static_cast<std::size_t>(3 * img.width * img.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) rows[static_cast<std::size_t>(y)] = img.rgb.data() + static_cast<std::size_t>(3 * y * img.width);
  png_read_image(png, rows.data());
  return img;
}

ImageF read_png_linear(const std::filesystem::path& path) {
  const Image8 img = read_png(path);
  ImageF out{img.width, img.height, std::vector<float>(img.rgb.size())};
  for (std::size_t i = 0; i < img.rgb.size(); ++i) out.rgb[i] = static_cast<float>(srgb_decode(img.rgb[i] / 255.0));
  return out;
}

namespace {

void rgbe_to_float(const std::uint8_t* rgbe, float* out) {
  if (rgbe[3] == 0) {
    out[0] = out[1] = out[2] = 0.0f;
    return;
  }
  const float f = std::ldexp(1.0f, rgbe[3] - (128 + 8));
  for (int c = 0; c < 3; ++c) out[c] = (rgbe[c] + 0.5f) * f;
}

void float_to_rgbe(const float* in, std::uint8_t* rgbe) {
  const float v = std::max({in[0], in[1], in[2]});
  if (v < 1e-32f) {
    rgbe[0] = rgbe[1] = rgbe[2] = rgbe[3] = 0;
    return;
  }
  int e = 0;
  const float m = std::frexp(v, &e) * 256.0f / v;
  for (int c = 0; c < 3; ++c) rgbe[c] = static_cast<std::uint8_t>(std::max(0.0f, in[c]) * m);
  rgbe[3] = static_cast<std::uint8_t>(e + 128);
}

}  // namespace

ImageF read_rgbe(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("#?", 0) != 0) throw IoError("not a Radiance file: " + path.string());
  bool format_ok = false;
  while (std::getline(in, line) && !line.empty())
    if (line == "FORMAT=32-bit_rle_rgbe") format_ok = true;
  if (!format_ok) throw IoError("unsupported Radiance pixel format in " + path.string());
  std::getline(in, line);
  int width = 0, height = 0;
  char ys[3] = {}, xs[3] = {};
  if (std::sscanf(line.c_str(), "%2s %d %2s %d", ys, &height, xs, &width) != 4 || std::string(ys) != "-Y" ||
      std::string(xs) != "+X" || width <= 0 || height <= 0)
    throw IoError("unsupported Radiance resolution line in " + path.string());

  ImageF img{width, height, std::vector<float>(static_cast<std::size_t>(3 * width * height))};
  std::vector<std::uint8_t> scan(static_cast<std::size_t>(4 * width));
  for (int y = 0; y < height; ++y) {
    std::uint8_t head[4];
    if (!in.read(reinterpret_cast<char*>(head), 4)) throw IoError("truncated Radiance file " + path.string());
    const bool rle = width >= 8 && width < 32768 && head[0] == 2 && head[1] == 2 && (head[2] & 0x80) == 0 &&
                     ((head[2] << 8) | head[3]) == width;
    if (!rle) {
      std::memcpy(scan.data(), head, 4);
      if (!in.read(reinterpret_cast<char*>(scan.data() + 4), 4 * width - 4))
        throw IoError("truncated Radiance file " + path.string());
    } else {
      std::vector<std::uint8_t> planar(static_cast<std::size_t>(4 * width));
      for (int c = 0; c < 4; ++c) {
        int x = 0;
        while (x < width) {
          int count = in.get();
          if (count == EOF) throw IoError("truncated Radiance file " + path.string());
          if (count > 128) {
            count -= 128;
            const int value = in.get();
            if (value == EOF || x + count > width) throw IoError("corrupt Radiance run in " + path.string());
            for (int i = 0; i < count; ++i) planar[static_cast<std::size_t>(c * width + x++)] = static_cast<std::uint8_t>(value);
          } else {
            if (count == 0 || x + count > width) throw IoError("corrupt Radiance run in " + path.string());
            for (int i = 0; i < count; ++i) {
              const int value = in.get();
              if (value == EOF) throw IoError("truncated Radiance file " + path.string());
              planar[static_cast<std::size_t>(c * width + x++)] = static_cast<std::uint8_t>(value);
            }
          }
        }
      }
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 4; ++c) scan[static_cast<std::size_t>(4 * x + c)] = planar[static_cast<std::size_t>(c * width + x)];
    }
    for (int x = 0; x < width; ++x)
      rgbe_to_float(scan.data() + 4 * x, img.rgb.data() + static_cast<std::size_t>(3 * (y * width + x)));
  }
  return img;
}

void write_rgbe(const ImageF& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << image.height << " +X " << image.width << "\n";
  std::vector<std::uint8_t> scan(static_cast<std::size_t>(4 * image.width));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x)
      float_to_rgbe(image.rgb.data() + static_cast<std::size_t>(3 * (y * image.width + x)), scan.data() + 4 * x);
    out.write(reinterpret_cast<const char*>(scan.data()), static_cast<std::streamsize>(scan.size()));
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace tprt
