// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "tacdiff/image.hpp"

namespace tacdiff {

// Depth maps are stored as 16-bit grayscale with 65535 == full_scale_mm.
void write_depth_png(const std::string& path, const DepthMap& depth, double full_scale_mm);
DepthMap read_depth_png(const std::string& path, double full_scale_mm);

// Unit-range 3-channel images as 8-bit RGB. Values are clamped and rounded.
void write_rgb_png(const std::string& path, const TactileImage& image);
TactileImage read_rgb_png(const std::string& path);

// Rounds every value to the nearest multiple of 1/255, as an 8-bit round trip would.
TactileImage quantize_8bit(const TactileImage& image);

}  // namespace tacdiff
