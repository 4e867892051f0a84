// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tacdiff/image.hpp"
#include "tacdiff/tactile_sim.hpp"

namespace tacdiff {

enum class CorpusKind { kPretrain, kFinetune, kClassifierTrain, kClassifierTest };

std::string to_string(CorpusKind kind);
CorpusKind corpus_kind_from_string(std::string_view name);

struct PairedSample {
  DepthMap depth;
  TactileImage target;
  std::shared_ptr<const TactileImage> background;
  std::optional<char> label;
  ContactPose pose;
  std::string object_id;
  std::string split;
};

// Signed contact-induced change img - background; zero where nothing touches.
LatentImage extract_foreground(const TactileImage& img, const TactileImage& background);
// background + foreground, clamped to [0, 1]. Any sensor's background works.
TactileImage composite_background(const LatentImage& foreground, const TactileImage& background);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle of 0..n-1 cut at floor(train_fraction * n).
SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_pairs(const std::vector<T>& samples,
                                                      double train_fraction, std::uint64_t seed) {
  const SplitIndices idx = split_indices(samples.size(), train_fraction, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i : idx.train) out.first.push_back(samples[i]);
  for (std::size_t i : idx.test) out.second.push_back(samples[i]);
  return out;
}

// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// Random brightness in [0.8, 1.2], per-channel gain in [0.9, 1.1] and a
// common offset in [-0.05, 0.05], clamped to [0, 1].
TactileImage augment_lighting(const TactileImage& img, std::uint64_t seed);

struct CorpusConfig {
  // Pretraining primitives, each pressed at random poses.
  std::vector<double> sphere_radii_mm{1.5, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> edge_widths_mm{1.0, 1.5, 2.0, 3.0, 4.0};
  int pretrain_poses_per_shape = 100;
  double pretrain_xy_range_mm = 4.0;
  double pretrain_dz_min_mm = -2.0;
  double pretrain_dz_max_mm = -0.3;
  // The pretraining corpus is captured on a second sensor.
  int pretrain_background_variant = 1;

  BrailleGeometry braille;
  PoseGridSpec finetune_grid{1.0, 3, -0.5, -0.5, 4, {-90.0, -45.0, 0.0, 45.0, 90.0}};
  int finetune_per_char = 20;  // 0 keeps every grid pose
  // Drop fine-tuning poses that also occur in the classifier grid.
  bool exclude_classifier_poses = true;
  PoseGridSpec classifier_grid{1.0, 3, -0.5, -0.5, 4, yaw_range(-25.0, 25.0, 5.0)};
  int classifier_train_per_char = 12;
  int classifier_test_per_char = 8;

  // Train/test assignment inside pretrain and finetune corpora.
  double train_fraction = 0.8;

  void validate() const;
};

nlohmann::json to_json(const CorpusConfig& config);
CorpusConfig corpus_config_from_json(const nlohmann::json& j);

// Renders every (shape, pose) pair of a corpus in memory. Deterministic in seed.
std::vector<PairedSample> generate_samples(CorpusKind kind, const SensorSpec& sensor,
                                           const CorpusConfig& config, std::uint64_t seed);

// The sensor a corpus kind is captured with (pretraining uses a different background).
SensorSpec corpus_sensor(CorpusKind kind, const SensorSpec& sensor, const CorpusConfig& config);

struct SampleRecord {
  std::string depth_path;
  std::string target_path;
  std::string depth_sha256;
  std::string target_sha256;
  std::optional<char> label;
  ContactPose pose;
  std::string object_id;
  std::string split;
};

struct CorpusManifest {
  CorpusKind kind = CorpusKind::kPretrain;
  std::uint64_t seed = 0;
  nlohmann::json sensor;
  std::string sensor_hash;
  nlohmann::json generation;
  double depth_full_scale_mm = 0.0;
  std::string background_path;
  std::string background_sha256;
  std::vector<SampleRecord> samples;
  // SHA-256 over the metadata and every listed file digest.
  std::string content_hash;
  // Directory the manifest was read from or written to; not serialized.
  std::filesystem::path root;

  std::size_t count(std::string_view split) const;
  std::string compute_hash() const;
};

inline constexpr const char* kManifestName = "manifest";

nlohmann::json to_json(const CorpusManifest& manifest);

// Writes depth/NNNNNN.png, target/NNNNNN.png, background.png and the manifest
// under dir. Throws PersistenceError naming the offending path.
CorpusManifest build_corpus(CorpusKind kind, const SensorSpec& sensor, const CorpusConfig& config,
                            std::uint64_t seed, const std::filesystem::path& dir);

CorpusManifest read_manifest(const std::filesystem::path& dir);

// Loads the samples of one split ("train", "test") or all of them, verifying
// file digests when verify is set.
std::vector<PairedSample> load_corpus(const CorpusManifest& manifest,
                                      std::optional<std::string> split = std::nullopt,
                                      bool verify = false);

}  // namespace tacdiff
