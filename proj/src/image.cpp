// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/image.hpp"

#include <algorithm>
#include <cmath>

#include "tacdiff/errors.hpp"

namespace tacdiff {

std::string to_string(const Shape& shape) {
  return std::to_string(shape.channels) + "x" + std::to_string(shape.height) + "x" +
         std::to_string(shape.width);
}

Image::Image(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {
  if (shape.channels <= 0 || shape.height <= 0 || shape.width <= 0) {
    throw ArgumentError("image shape must be positive, got " + to_string(shape));
  }
}

bool Image::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Image Image::clamped(double lo, double hi) const {
  Image out = *this;
  for (double& v : out.data_) v = std::clamp(v, lo, hi);
  return out;
}

double DepthMap::max_value() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, v);
  return m;
}

Image DepthMap::normalized(double max_penetration_mm) const {
  if (!(max_penetration_mm > 0.0)) throw ConfigError("max_penetration must be positive");
  Image out(1, height_, width_);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    out[i] = std::clamp(data_[i] / max_penetration_mm, 0.0, 1.0);
  }
  return out;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ArgumentError(std::string(what) + ": shape mismatch " + to_string(a.shape()) +
                        " vs " + to_string(b.shape()));
  }
}

}  // namespace tacdiff
