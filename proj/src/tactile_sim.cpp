// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/tactile_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "tacdiff/errors.hpp"
#include "tacdiff/hashing.hpp"
#include "tacdiff/rng.hpp"

namespace tacdiff {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kNoSurface = -std::numeric_limits<double>::infinity();

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Standard six-dot literary braille, letters a-z, then the number sign.
constexpr BrailleMask kBraille[27] = {
    0b000001,  // A 1
    0b000011,  // B 12
    0b001001,  // C 14
    0b011001,  // D 145
    0b010001,  // E 15
    0b001011,  // F 124
    0b011011,  // G 1245
    0b010011,  // H 125
    0b001010,  // I 24
    0b011010,  // J 245
    0b000101,  // K 13
    0b000111,  // L 123
    0b001101,  // M 134
    0b011101,  // N 1345
    0b010101,  // O 135
    0b001111,  // P 1234
    0b011111,  // Q 12345
    0b010111,  // R 1235
    0b001110,  // S 234
    0b011110,  // T 2345
    0b100101,  // U 136
    0b100111,  // V 1236
    0b111010,  // W 2456
    0b101101,  // X 1346
    0b111101,  // Y 13456
    0b110101,  // Z 1356
    0b111100,  // # 3456
};

}  // namespace

// ---------------------------------------------------------------- sensor

std::array<DirectionalLight, 3> tricolor_lights(double elevation_deg) {
  const double azimuths[3] = {90.0, 210.0, 330.0};
  const Rgb colors[3] = {{0.9, 0.15, 0.1}, {0.1, 0.85, 0.15}, {0.1, 0.2, 0.9}};
  std::array<DirectionalLight, 3> lights{};
  const double ce = std::cos(elevation_deg * kDeg);
  const double se = std::sin(elevation_deg * kDeg);
  for (int i = 0; i < 3; ++i) {
    lights[i].direction = {ce * std::cos(azimuths[i] * kDeg), ce * std::sin(azimuths[i] * kDeg),
                           se};
    lights[i].color = colors[i];
  }
  return lights;
}

TactileImage make_background(int height, int width, int variant) {
  Rgb base{0.34, 0.36, 0.42};
  double vignette = 0.25;
  double tilt = 0.04;
  if (variant > 0) {
    Rng rng(derive_seed(0xb4c6, {static_cast<std::uint64_t>(variant)}));
    for (double& b : base) b += rng.uniform(-0.04, 0.04);
    vignette += rng.uniform(-0.08, 0.08);
    tilt = rng.uniform(-0.06, 0.06);
  }
  TactileImage bg(3, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width - 0.5;
      const double v = (y + 0.5) / height - 0.5;
      const double fall = 1.0 - vignette * 4.0 * (u * u + v * v) / 2.0;
      bg.at(0, y, x) = base[0] * fall + tilt * u;
      bg.at(1, y, x) = base[1] * fall;
      bg.at(2, y, x) = base[2] * fall - tilt * v;
    }
  }
  return bg.clamped(0.0, 1.0);
}

SensorSpec default_sensor(int height, int width) {
  SensorSpec s;
  s.height = height;
  s.width = width;
  s.lights = tricolor_lights();
  s.background = make_background(height, width);
  s.validate();
  return s;
}

void SensorSpec::validate() const {
  if (height <= 0 || width <= 0) throw ConfigError("sensor resolution must be positive");
  if (!(gel_width_mm > 0.0 && gel_height_mm > 0.0)) throw ConfigError("gel size must be positive");
  if (!(max_penetration_mm > 0.0)) throw ConfigError("max_penetration_mm must be positive");
  for (const auto& l : lights) {
    if (std::abs(std::sqrt(dot3(l.direction, l.direction)) - 1.0) > 1e-9) {
      throw ConfigError("light directions must be unit vectors");
    }
  }
  if (background.channels() != 3 || background.height() != height ||
      background.width() != width) {
    throw ConfigError("sensor background must be 3 x " + std::to_string(height) + " x " +
                      std::to_string(width));
  }
}

nlohmann::json to_json(const SensorSpec& s) {
  nlohmann::json lights = nlohmann::json::array();
  for (const auto& l : s.lights) lights.push_back({{"direction", l.direction}, {"color", l.color}});
  return {{"gel_width_mm", s.gel_width_mm},
          {"gel_height_mm", s.gel_height_mm},
          {"height", s.height},
          {"width", s.width},
          {"max_penetration_mm", s.max_penetration_mm},
          {"lights", lights},
          {"ambient", s.ambient},
          {"diffuse", s.diffuse},
          {"specular", s.specular},
          {"shininess", s.shininess},
          {"slope_gain", s.slope_gain}};
}

std::string SensorSpec::hash() const {
  Sha256 h;
  h.update(to_json(*this).dump());
  h.update_values(background.values().data(), background.size());
  return h.hex_digest();
}

nlohmann::json to_json(const ContactPose& p) {
  return {{"dx_mm", p.dx_mm}, {"dy_mm", p.dy_mm}, {"dz_mm", p.dz_mm}, {"yaw_deg", p.yaw_deg}};
}

ContactPose contact_pose_from_json(const nlohmann::json& j) {
  return {j.at("dx_mm").get<double>(), j.at("dy_mm").get<double>(), j.at("dz_mm").get<double>(),
          j.at("yaw_deg").get<double>()};
}

// ---------------------------------------------------------------- braille

const std::string& braille_alphabet() {
  static const std::string kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ#";
  return kAlphabet;
}

int braille_class_index(char ch) {
  const auto pos = braille_alphabet().find(ch);
  if (pos == std::string::npos) {
    throw DomainError(std::string("unsupported braille character '") + ch + "'");
  }
  return static_cast<int>(pos);
}

BrailleMask braille_pattern(char ch) { return kBraille[braille_class_index(ch)]; }

// ---------------------------------------------------------------- indenters

IndenterShape IndenterShape::sphere(double radius_mm) {
  IndenterShape s;
  s.kind = Kind::kSphere;
  s.radius_mm = radius_mm;
  s.validate();
  return s;
}

IndenterShape IndenterShape::edge(double width_mm, double angle_deg) {
  IndenterShape s;
  s.kind = Kind::kEdge;
  s.edge_width_mm = width_mm;
  s.edge_angle_deg = angle_deg;
  s.validate();
  return s;
}

IndenterShape IndenterShape::braille_cell(char ch, BrailleGeometry geometry) {
  IndenterShape s;
  s.kind = Kind::kBrailleCell;
  s.braille_mask = braille_pattern(ch);
  s.braille = geometry;
  s.validate();
  return s;
}

void IndenterShape::validate() const {
  switch (kind) {
    case Kind::kSphere:
      if (!(radius_mm > 0.0)) throw ConfigError("sphere radius must be positive");
      break;
    case Kind::kEdge:
      if (!(edge_width_mm > 0.0)) throw ConfigError("edge width must be positive");
      break;
    case Kind::kBrailleCell:
      if (braille_mask == 0 || braille_mask > 0b111111) {
        throw ConfigError("braille mask must be a non-empty 6-bit pattern");
      }
      if (!(braille.dot_radius_mm > 0.0 && braille.dot_spacing_mm > 0.0 &&
            braille.dot_height_mm > 0.0 && braille.plate_size_mm > 0.0)) {
        throw ConfigError("braille geometry must be positive");
      }
      break;
  }
}

double IndenterShape::surface_height(double u, double v) const {
  switch (kind) {
    case Kind::kSphere: {
      const double r2 = u * u + v * v;
      const double rr = radius_mm * radius_mm;
      return r2 < rr ? std::sqrt(rr - r2) - radius_mm : kNoSurface;
    }
    case Kind::kEdge: {
      const double a = edge_angle_deg * kDeg;
      const double d = -std::sin(a) * u + std::cos(a) * v;
      const double rho = 0.5 * edge_width_mm;
      return std::abs(d) < rho ? std::sqrt(rho * rho - d * d) - rho : kNoSurface;
    }
    case Kind::kBrailleCell: {
      const BrailleGeometry& g = braille;
      const double half = 0.5 * g.plate_size_mm;
      double best = (std::abs(u) <= half && std::abs(v) <= half) ? -g.dot_height_mm : kNoSurface;
      // spherical cap: base radius a, height h, sphere radius (a^2 + h^2) / 2h
      const double a = g.dot_radius_mm;
      const double h = g.dot_height_mm;
      const double rs = (a * a + h * h) / (2.0 * h);
      for (int dot = 0; dot < 6; ++dot) {
        if (!(braille_mask & (1u << dot))) continue;
        const double cu = (dot < 3 ? -0.5 : 0.5) * g.dot_spacing_mm;
        const double cv = ((dot % 3) - 1) * g.dot_spacing_mm;
        const double r2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
        if (r2 >= a * a) continue;
        const double cap = std::sqrt(rs * rs - r2) - (rs - h);
        best = std::max(best, cap - h);
      }
      return best;
    }
  }
  return kNoSurface;
}

std::string IndenterShape::describe() const {
  char buf[64];
  switch (kind) {
    case Kind::kSphere:
      std::snprintf(buf, sizeof buf, "sphere_r%.2f", radius_mm);
      break;
    case Kind::kEdge:
      std::snprintf(buf, sizeof buf, "edge_w%.2f_a%.0f", edge_width_mm, edge_angle_deg);
      break;
    case Kind::kBrailleCell: {
      char letter = '?';
      for (char c : braille_alphabet()) {
        if (braille_pattern(c) == braille_mask) letter = c;
      }
      std::snprintf(buf, sizeof buf, "braille_%c", letter);
      break;
    }
  }
  return buf;
}

// ---------------------------------------------------------------- rendering

DepthMap render_depth(const IndenterShape& shape, const ContactPose& pose,
                      const SensorSpec& sensor) {
  shape.validate();
  if (std::abs(pose.dx_mm) > 0.5 * sensor.gel_width_mm ||
      std::abs(pose.dy_mm) > 0.5 * sensor.gel_height_mm) {
    throw DomainError("contact offset outside the gel");
  }
  if (!(pose.yaw_deg >= -180.0 && pose.yaw_deg < 180.0)) {
    throw DomainError("yaw must lie in [-180, 180)");
  }
  DepthMap depth(sensor.height, sensor.width);
  const double c = std::cos(pose.yaw_deg * kDeg);
  const double s = std::sin(pose.yaw_deg * kDeg);
  const double px = sensor.mm_per_px_x();
  const double py = sensor.mm_per_px_y();
  for (int y = 0; y < sensor.height; ++y) {
    for (int x = 0; x < sensor.width; ++x) {
      const double du = (x + 0.5) * px - 0.5 * sensor.gel_width_mm - pose.dx_mm;
      const double dv = (y + 0.5) * py - 0.5 * sensor.gel_height_mm - pose.dy_mm;
      // rotate the gel point into the indenter frame
      const double u = c * du + s * dv;
      const double v = -s * du + c * dv;
      const double h = shape.surface_height(u, v);
      depth.at(y, x) = std::isfinite(h) ? std::clamp(h - pose.dz_mm, 0.0, sensor.max_penetration_mm)
                                        : 0.0;
    }
  }
  return depth;
}

std::array<double, 3> gel_normal(const DepthMap& depth, const SensorSpec& sensor, int y, int x) {
  const int x0 = std::max(x - 1, 0), x1 = std::min(x + 1, depth.width() - 1);
  const int y0 = std::max(y - 1, 0), y1 = std::min(y + 1, depth.height() - 1);
  const double gx = (depth.at(y, x1) - depth.at(y, x0)) / ((x1 - x0) * sensor.mm_per_px_x());
  const double gy = (depth.at(y1, x) - depth.at(y0, x)) / ((y1 - y0) * sensor.mm_per_px_y());
  // The gel surface is z = -depth, so its upward normal is (d_x depth, d_y depth, 1).
  return {sensor.slope_gain * gx, sensor.slope_gain * gy, 1.0};
}

Rgb phong_response(const std::array<double, 3>& n, const SensorSpec& sensor) {
  Rgb out = sensor.ambient;
  for (const auto& light : sensor.lights) {
    const double ndl = dot3(n, light.direction);
    const double diffuse = sensor.diffuse * std::max(0.0, ndl);
    // reflection of the light about n, seen by a camera looking down -z
    const double rz = 2.0 * ndl * n[2] - light.direction[2];
    const double spec =
        ndl > 0.0 ? sensor.specular * std::pow(std::max(0.0, rz), sensor.shininess) : 0.0;
    for (int ch = 0; ch < 3; ++ch) out[ch] += light.color[ch] * (diffuse + spec);
  }
  return out;
}

TactileImage oracle_render(const DepthMap& depth, const SensorSpec& sensor) {
  if (depth.height() != sensor.height || depth.width() != sensor.width) {
    throw ArgumentError("depth map does not match sensor resolution");
  }
  const Rgb flat = phong_response({0.0, 0.0, 1.0}, sensor);
  TactileImage img = sensor.background;
  for (int y = 0; y < sensor.height; ++y) {
    for (int x = 0; x < sensor.width; ++x) {
      auto n = gel_normal(depth, sensor, y, x);
      const double len = std::sqrt(dot3(n, n));
      for (double& v : n) v /= len;
      const Rgb shade = phong_response(n, sensor);
      for (int ch = 0; ch < 3; ++ch) {
        img.at(ch, y, x) = std::clamp(img.at(ch, y, x) + (shade[ch] - flat[ch]), 0.0, 1.0);
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------- pose grids

std::vector<double> yaw_range(double lo_deg, double hi_deg, double step_deg) {
  if (!(step_deg > 0.0) || hi_deg < lo_deg) throw ConfigError("invalid yaw range");
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi_deg - lo_deg) / step_deg + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(lo_deg + i * step_deg);
  return out;
}

std::vector<ContactPose> pose_grid(const PoseGridSpec& spec) {
  if (spec.xy_count < 1 || spec.z_count < 1 || spec.yaws_deg.empty()) {
    throw ConfigError("pose grid ranges must be non-empty");
  }
  std::vector<double> xy(spec.xy_count);
  for (int i = 0; i < spec.xy_count; ++i) {
    xy[i] = (i - 0.5 * (spec.xy_count - 1)) * spec.xy_step_mm;
  }
  std::vector<ContactPose> poses;
  poses.reserve(xy.size() * xy.size() * spec.z_count * spec.yaws_deg.size());
  for (double dx : xy) {
    for (double dy : xy) {
      for (int k = 0; k < spec.z_count; ++k) {
        for (double yaw : spec.yaws_deg) {
          if (!(yaw >= -180.0 && yaw < 180.0)) throw ConfigError("yaw outside [-180, 180)");
          poses.push_back({dx, dy, spec.z_start_mm + k * spec.z_step_mm, yaw});
        }
      }
    }
  }
  return poses;
}

PoseGridSpec full_finetune_grid() {
  return {5.0, 3, -0.5, -0.5, 4, {-90.0, -45.0, 0.0, 45.0, 90.0}};
}

PoseGridSpec full_classifier_grid() {
  return {3.0, 3, -0.5, -0.5, 4, yaw_range(-25.0, 25.0, 5.0)};
}

}  // namespace tacdiff
