// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tacdiff {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

// Planar C x H x W image of doubles. Used for diffusion states, noise fields
// and unit-range tactile images alike; the alias names below carry intent.
class Image {
 public:
  Image() = default;
  explicit Image(Shape shape, double fill = 0.0);
  Image(int channels, int height, int width, double fill = 0.0)
      : Image(Shape{channels, height, width}, fill) {}

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const;
  Image clamped(double lo, double hi) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// y_0, y_t and generated diffusion states, in [-1, 1] normalized space.
using LatentImage = Image;
// Independent standard-normal draws shaped like the image they perturb.
using NoiseField = Image;
// Three-channel tactile image with intensities in [0, 1].
using TactileImage = Image;

// Gel penetration depth in millimetres, H x W, zero where there is no contact.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int height, int width, double fill = 0.0)
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double max_value() const;

  // Single-channel image of depth / max_penetration, the network input.
  Image normalized(double max_penetration_mm) const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace tacdiff
