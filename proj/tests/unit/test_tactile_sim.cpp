// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "tacdiff/errors.hpp"
#include "tacdiff/tactile_sim.hpp"
#include "test_util.hpp"

namespace tacdiff {
namespace {

SensorSpec small_sensor() { return default_sensor(16, 16); }

TEST(OracleRenderer, MatchesIndependentReference) {
  const auto oracle = testing::load_json("render_oracle.json");
  const SensorSpec sensor = small_sensor();
  for (const auto& c : oracle.at("cases")) {
    const auto p = c.at("pose").get<std::vector<double>>();
    const ContactPose pose{p[0], p[1], p[2], p[3]};
    const IndenterShape shape = c.at("shape") == "sphere"
                                    ? IndenterShape::sphere(c.at("radius_mm"))
                                    : IndenterShape::braille_cell(c.at("char").get<std::string>()[0]);
    const DepthMap depth = render_depth(shape, pose, sensor);
    const auto want_depth = c.at("depth").get<std::vector<double>>();
    ASSERT_EQ(depth.size(), want_depth.size());
    double max_depth = 0.0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
      EXPECT_NEAR(depth[i], want_depth[i], 1e-12) << shape.describe() << " pixel " << i;
      max_depth = std::max(max_depth, depth[i]);
    }
    EXPECT_GT(max_depth, 0.5);
    const TactileImage img = oracle_render(depth, sensor);
    const auto fg = c.at("foreground").get<std::vector<double>>();
    for (std::size_t i = 0; i < img.size(); ++i) {
      const double want = std::clamp(sensor.background[i] + fg[i], 0.0, 1.0);
      EXPECT_NEAR(img[i], want, 1e-12) << shape.describe() << " value " << i;
    }
  }
}

TEST(OracleRenderer, NoContactReproducesBackground) {
  const SensorSpec sensor = default_sensor();
  const DepthMap depth = render_depth(IndenterShape::sphere(2.0), {0.0, 0.0, 1.0, 0.0}, sensor);
  EXPECT_EQ(depth.max_value(), 0.0);
  const TactileImage img = oracle_render(depth, sensor);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(img[i], sensor.background[i]);
}

TEST(OracleRenderer, DeeperPressSpreadsContact) {
  const SensorSpec sensor = default_sensor();
  auto area = [&](double dz) {
    const auto d = render_depth(IndenterShape::sphere(3.0), {0.0, 0.0, dz, 0.0}, sensor);
    return std::count_if(d.values().begin(), d.values().end(), [](double v) { return v > 0.0; });
  };
  EXPECT_LT(area(-0.5), area(-1.5));
  const auto d = render_depth(IndenterShape::sphere(3.0), {0.0, 0.0, -5.0, 0.0}, sensor);
  EXPECT_LE(d.max_value(), sensor.max_penetration_mm);
}

TEST(OracleRenderer, LightsAreUnitVectorsAtElevation) {
  for (const auto& l : tricolor_lights(35.0)) {
    const auto& d = l.direction;
    EXPECT_NEAR(d[0] * d[0] + d[1] * d[1] + d[2] * d[2], 1.0, 1e-12);
    EXPECT_NEAR(d[2], std::sin(35.0 * M_PI / 180.0), 1e-12);
  }
  const SensorSpec s = default_sensor();
  const Rgb flat = phong_response({0.0, 0.0, 1.0}, s);
  const Rgb tilted = phong_response({0.0, std::sin(0.3), std::cos(0.3)}, s);
  // Tilting towards +y (the red light's azimuth) brightens red.
  EXPECT_GT(tilted[0], flat[0]);
}

TEST(OracleRenderer, RejectsOutOfDomainPoses) {
  const SensorSpec s = default_sensor();
  const auto sphere = IndenterShape::sphere(2.0);
  EXPECT_THROW(render_depth(sphere, {9.0, 0.0, -1.0, 0.0}, s), DomainError);
  EXPECT_THROW(render_depth(sphere, {0.0, -8.5, -1.0, 0.0}, s), DomainError);
  EXPECT_THROW(render_depth(sphere, {0.0, 0.0, -1.0, 180.0}, s), DomainError);
  EXPECT_NO_THROW(render_depth(sphere, {0.0, 0.0, -1.0, -180.0}, s));
  EXPECT_THROW(oracle_render(DepthMap(8, 8), s), ArgumentError);
  EXPECT_THROW(IndenterShape::sphere(-1.0).validate(), ConfigError);
}

TEST(OracleRenderer, YawRotatesEdgeContact) {
  const SensorSpec s = default_sensor();
  const auto edge = IndenterShape::edge(2.0, 0.0);
  const auto a = render_depth(edge, {0.0, 0.0, -1.0, 0.0}, s);
  const auto b = render_depth(edge, {0.0, 0.0, -1.0, 90.0}, s);
  // A 90 degree turn transposes the contact pattern of a centred edge.
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) EXPECT_NEAR(a.at(y, x), b.at(x, y), 1e-9);
  }
}

TEST(Braille, TableIsComplete) {
  const std::string& alphabet = braille_alphabet();
  ASSERT_EQ(alphabet.size(), 27u);
  EXPECT_EQ(alphabet.back(), '#');
  std::set<BrailleMask> seen;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    EXPECT_EQ(braille_class_index(alphabet[i]), static_cast<int>(i));
    EXPECT_NE(braille_pattern(alphabet[i]), 0);
    seen.insert(braille_pattern(alphabet[i]));
  }
  EXPECT_EQ(seen.size(), 27u);
  EXPECT_EQ(braille_pattern('A'), 0b000001);
  EXPECT_EQ(braille_pattern('K'), 0b000101);
  EXPECT_EQ(braille_pattern('W'), 0b111010);
  EXPECT_EQ(braille_pattern('#'), 0b111100);
  EXPECT_THROW(braille_class_index('a'), DomainError);
  EXPECT_THROW(braille_pattern('?'), DomainError);
}

TEST(Braille, DotsStandAboveThePlate) {
  const auto cell = IndenterShape::braille_cell('A');
  const auto& g = cell.braille;
  // dot 1 sits at the top of the left column
  EXPECT_NEAR(cell.surface_height(-0.5 * g.dot_spacing_mm, -g.dot_spacing_mm), 0.0, 1e-12);
  EXPECT_NEAR(cell.surface_height(0.5 * g.dot_spacing_mm, 0.0), -g.dot_height_mm, 1e-12);
  EXPECT_TRUE(std::isinf(cell.surface_height(g.plate_size_mm, 0.0)));
  EXPECT_EQ(cell.describe(), "braille_A");
}

TEST(PoseGrid, Sizes) {
  EXPECT_EQ(pose_grid(full_finetune_grid()).size(), 180u);
  EXPECT_EQ(pose_grid(full_classifier_grid()).size(), 396u);
  EXPECT_EQ(yaw_range(-25, 25, 5).size(), 11u);
  const auto g = pose_grid(PoseGridSpec{});
  EXPECT_EQ(g.size(), 36u);
  EXPECT_EQ(g.front().dx_mm, -1.0);
  EXPECT_EQ(g.front().dz_mm, -0.5);
  EXPECT_EQ(g.back().dz_mm, -2.0);
  PoseGridSpec empty;
  empty.yaws_deg.clear();
  EXPECT_THROW(pose_grid(empty), ConfigError);
}

TEST(Sensor, HashTracksParameters) {
  SensorSpec a = default_sensor();
  SensorSpec b = default_sensor();
  EXPECT_EQ(a.hash(), b.hash());
  b.diffuse = 0.5;
  EXPECT_NE(a.hash(), b.hash());
  SensorSpec c = default_sensor();
  c.background = make_background(64, 64, 1);
  EXPECT_NE(a.hash(), c.hash());
  SensorSpec bad = default_sensor();
  bad.background = make_background(32, 32);
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Sensor, PoseJsonRoundTrip) {
  const ContactPose p{1.5, -0.5, -1.25, 45.0};
  EXPECT_EQ(contact_pose_from_json(to_json(p)), p);
}

}  // namespace
}  // namespace tacdiff
