// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacdiff/image.hpp"

namespace tacdiff {

using Rgb = std::array<double, 3>;

struct DirectionalLight {
  std::array<double, 3> direction;  // unit vector from the gel towards the light
  Rgb color;
};

// Geometry and optics of the simulated sensor. The background is the
// no-contact image; the flat-gel shading response is folded into it.
struct SensorSpec {
  double gel_width_mm = 16.0;
  double gel_height_mm = 16.0;
  int height = 64;
  int width = 64;
  double max_penetration_mm = 2.5;
  std::array<DirectionalLight, 3> lights{};
  Rgb ambient{0.05, 0.05, 0.05};
  double diffuse = 0.6;
  double specular = 0.15;
  double shininess = 12.0;
  // Multiplies heightmap slopes before normals are formed.
  double slope_gain = 1.0;
  TactileImage background;

  double mm_per_px_x() const { return gel_width_mm / width; }
  double mm_per_px_y() const { return gel_height_mm / height; }
  void validate() const;
  // SHA-256 over the canonical parameters and the background pixels.
  std::string hash() const;
};

// Red, green and blue lights at azimuths 90, 210 and 330 degrees, 35 degrees
// above the gel plane.
std::array<DirectionalLight, 3> tricolor_lights(double elevation_deg = 35.0);

// Smooth vignetted no-contact image. variant > 0 perturbs the tint the way two
// physical sensors differ.
TactileImage make_background(int height, int width, int variant = 0);

SensorSpec default_sensor(int height = 64, int width = 64);

nlohmann::json to_json(const SensorSpec& sensor);

struct ContactPose {
  double dx_mm = 0.0;
  double dy_mm = 0.0;
  double dz_mm = 0.0;  // negative presses into the gel
  double yaw_deg = 0.0;

  friend bool operator==(const ContactPose&, const ContactPose&) = default;
};

nlohmann::json to_json(const ContactPose& pose);
ContactPose contact_pose_from_json(const nlohmann::json& j);

// Dot numbering: 1-3 down the left column, 4-6 down the right column; bit
// (d - 1) of the mask is set when dot d is raised.
using BrailleMask = std::uint8_t;

// The 27-character task alphabet: A..Z followed by '#'.
const std::string& braille_alphabet();
BrailleMask braille_pattern(char ch);
int braille_class_index(char ch);

struct BrailleGeometry {
  double dot_radius_mm = 1.5;   // base radius of a dot
  double dot_spacing_mm = 5.0;  // pitch between neighbouring dots
  double dot_height_mm = 1.0;
  double plate_size_mm = 20.0;  // square footprint of the printed object
};

struct IndenterShape {
  enum class Kind { kSphere, kEdge, kBrailleCell };

  Kind kind = Kind::kSphere;
  double radius_mm = 3.0;        // sphere
  double edge_width_mm = 2.0;    // edge: cylinder of diameter edge_width lying in the plane
  double edge_angle_deg = 0.0;
  BrailleMask braille_mask = 0;  // braille cell
  BrailleGeometry braille;

  static IndenterShape sphere(double radius_mm);
  static IndenterShape edge(double width_mm, double angle_deg);
  static IndenterShape braille_cell(char ch, BrailleGeometry geometry = {});

  void validate() const;
  // Height of the indenter surface at object-frame (u, v) relative to its
  // highest point (<= 0), or -infinity where the indenter has no surface.
  double surface_height(double u_mm, double v_mm) const;
  std::string describe() const;
};

// Penetration depth map for a rigid indenter pressed dz into the gel.
DepthMap render_depth(const IndenterShape& shape, const ContactPose& pose,
                      const SensorSpec& sensor);

// Phong-shaded RGB image of the deformed gel: background plus the change in
// ambient + diffuse + specular response relative to a flat gel.
TactileImage oracle_render(const DepthMap& depth, const SensorSpec& sensor);

// In-plane normal (before normalisation) of the deformed gel at a pixel.
std::array<double, 3> gel_normal(const DepthMap& depth, const SensorSpec& sensor, int y, int x);
// Shading response for a unit normal, without background.
Rgb phong_response(const std::array<double, 3>& normal, const SensorSpec& sensor);

struct PoseGridSpec {
  double xy_step_mm = 1.0;
  int xy_count = 3;  // per axis, centred on zero
  double z_start_mm = -0.5;
  double z_step_mm = -0.5;
  int z_count = 4;
  std::vector<double> yaws_deg{0.0};
};

// Inclusive arithmetic range lo, lo + step, ..., hi.
std::vector<double> yaw_range(double lo_deg, double hi_deg, double step_deg);

// Cartesian product ordered x, y, z, yaw (yaw varies fastest).
std::vector<ContactPose> pose_grid(const PoseGridSpec& spec);

// The braille fine-tuning geometry: 3x3 XY at +-5 mm, 4 Z levels, yaws {0, +-45, +-90}.
PoseGridSpec full_finetune_grid();
// The braille classifier geometry: 3x3 XY at +-3 mm, 4 Z levels, yaws -25..25 step 5.
PoseGridSpec full_classifier_grid();

}  // namespace tacdiff
