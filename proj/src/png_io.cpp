// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "tacdiff/errors.hpp"

namespace tacdiff {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_image(const std::string& path, png_uint_32 format, int height, int width,
                 const void* buffer) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer, 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw PersistenceError("cannot write PNG (" + msg + ")", path);
  }
}

template <class Pixel>
std::vector<Pixel> read_image(const std::string& path, png_uint_32 format, int channels,
                              int* height, int* width) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw PersistenceError("cannot open PNG (" + std::string(img.message) + ")", path);
  }
  img.format = format;
  std::vector<Pixel> buffer(static_cast<std::size_t>(img.width) * img.height * channels);
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw PersistenceError("cannot decode PNG (" + msg + ")", path);
  }
  *height = static_cast<int>(img.height);
  *width = static_cast<int>(img.width);
  return buffer;
}

}  // namespace

void write_depth_png(const std::string& path, const DepthMap& depth, double full_scale_mm) {
  if (!(full_scale_mm > 0.0)) throw ArgumentError("full_scale_mm must be positive");
  std::vector<std::uint16_t> buf(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double v = std::clamp(depth[i] / full_scale_mm, 0.0, 1.0);
    buf[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  write_image(path, PNG_FORMAT_LINEAR_Y, depth.height(), depth.width(), buf.data());
}

DepthMap read_depth_png(const std::string& path, double full_scale_mm) {
  int h = 0, w = 0;
  const auto buf = read_image<std::uint16_t>(path, PNG_FORMAT_LINEAR_Y, 1, &h, &w);
  DepthMap depth(h, w);
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = buf[i] / 65535.0 * full_scale_mm;
  return depth;
}

void write_rgb_png(const std::string& path, const TactileImage& image) {
  if (image.channels() != 3) throw ArgumentError("RGB PNG needs a 3-channel image");
  const int h = image.height(), w = image.width();
  std::vector<std::uint8_t> buf(image.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_u8(image.at(c, y, x));
    }
  }
  write_image(path, PNG_FORMAT_RGB, h, w, buf.data());
}

TactileImage read_rgb_png(const std::string& path) {
  int h = 0, w = 0;
  const auto buf = read_image<std::uint8_t>(path, PNG_FORMAT_RGB, 3, &h, &w);
  TactileImage image(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        image.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
      }
    }
  }
  return image;
}

TactileImage quantize_8bit(const TactileImage& image) {
  TactileImage out = image;
  for (double& v : out.values()) v = to_u8(v) / 255.0;
  return out;
}

}  // namespace tacdiff
