// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacdiff/classifier.hpp"
#include "tacdiff/dataset.hpp"
#include "tacdiff/denoiser.hpp"
#include "tacdiff/image.hpp"
#include "tacdiff/schedule.hpp"

namespace tacdiff {

// Mean SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// population statistics, evaluated where the window fits inside the image
// and averaged over pixels and channels.
double ssim(const Image& a, const Image& b, double data_range = 1.0);

// Mean squared error of unit-range images, reported in 0..255 intensity units.
double mse(const Image& a, const Image& b);

struct SimilarityReport {
  std::vector<std::string> ids;
  std::vector<double> ssim;
  std::vector<double> mse;
  double mean_ssim = 0.0;
  double mean_mse = 0.0;
};

SimilarityReport similarity_report(std::span<const TactileImage> generated,
                                   std::span<const TactileImage> targets,
                                   std::span<const std::string> ids = {});
nlohmann::json to_json(const SimilarityReport& report);

struct ClassifierMetrics {
  double accuracy_pct = 0.0;
  double precision = 0.0;  // macro average over all classes
  double recall = 0.0;     // macro average over all classes
};

// Classes never predicted (resp. never present) contribute 0 precision (resp. recall).
ClassifierMetrics classifier_metrics(std::span<const int> predictions, std::span<const int> labels,
                                     int num_classes = 27);

struct ComparisonRow {
  std::string source;
  std::string real_finetune_pct = "-";
  ClassifierMetrics metrics;
  std::optional<double> reference_accuracy_pct;  // published value for context
  std::size_t train_images = 0;
  std::vector<std::string> warnings;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::size_t test_images = 0;
  std::string averaging = "macro";
  nlohmann::json config;

  const ComparisonRow* find(std::string_view source, std::string_view real_pct = "-") const;
};

nlohmann::json to_json(const ComparisonReport& report);
std::string format_report(const ComparisonReport& report);

struct HarnessConfig {
  ClassifierConfig classifier;
  // Share of oracle training images used by the sim + fine-tuning row.
  double real_finetune_fraction = 0.2;
  std::uint64_t seed = 0;
  int sample_batch_size = 16;
};

nlohmann::json to_json(const HarnessConfig& config);
HarnessConfig harness_config_from_json(const nlohmann::json& j);

// Three-channel copy of depth / full_scale: what a classifier sees in pure simulation.
Image sim_image(const DepthMap& depth, double full_scale_mm);

LabeledImages labeled(std::span<const PairedSample> samples, std::span<const Image> images);

// Trains one classifier per training source with identical architecture, seed
// and step budget, and evaluates all of them on the oracle test images. The
// diffusion row samples foregrounds for the training depth maps and composites
// them onto the test background. Generated images are returned through
// generated when it is non-null.
ComparisonReport run_comparison(const HarnessConfig& config,
                                std::span<const PairedSample> classifier_train,
                                std::span<const PairedSample> classifier_test,
                                const DenoiserParams& diffusion, const NoiseSchedule& schedule,
                                std::vector<TactileImage>* generated = nullptr);

// Same, loading both classifier corpora and the fine-tuned checkpoint.
// Missing inputs raise ConfigError naming them.
ComparisonReport run_comparison(const HarnessConfig& config,
                                const std::filesystem::path& classifier_train_dir,
                                const std::filesystem::path& classifier_test_dir,
                                const std::filesystem::path& checkpoint);

struct PanelRecord {
  std::string path;
  double ssim = 0.0;
};

// Writes panel_NNNN.png per sample: sim depth | target | generated | |difference|,
// with the generated-vs-target SSIM printed in a strip underneath, and
// panels.json listing the values.
std::vector<PanelRecord> emit_panels(std::span<const DepthMap> depth,
                                     std::span<const TactileImage> targets,
                                     std::span<const TactileImage> generated,
                                     double depth_full_scale_mm,
                                     const std::filesystem::path& out_dir);

}  // namespace tacdiff
