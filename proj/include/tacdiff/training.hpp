// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacdiff/checkpoint.hpp"
#include "tacdiff/dataset.hpp"
#include "tacdiff/denoiser.hpp"

namespace tacdiff {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 8;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  ScheduleDescriptor schedule;
  // Fraction of the corpus used, floor(fraction * N) samples picked by seed.
  double data_fraction = 1.0;
  // Hard cap on optimizer steps across the whole run; 0 disables it.
  int max_steps = 0;
  double max_grad_norm = 1.0;
  int checkpoint_every_epochs = 1;
  // Abort when an epoch's mean loss exceeds this multiple of the first epoch's.
  double divergence_factor = 10.0;
  // Accepted for config compatibility; every computation runs on the CPU.
  std::string device = "cpu";

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainLog {
  std::vector<double> step_losses;  // steps run by this call
  std::int64_t first_step = 0;      // global index of step_losses[0]
  std::vector<double> epoch_mean_losses;  // every completed epoch, including resumed ones
  double wall_seconds = 0.0;
  std::string final_checkpoint;
};

struct TrainOptions {
  // Receives epoch_NNNN.ckpt, final.ckpt and train.log; empty disables all files.
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  // Stop (without a final checkpoint) after this many steps of this call; 0 = run to the end.
  int stop_after_steps = 0;
  bool verbose = false;
};

struct TrainResult {
  DenoiserParams model;
  TrainLog log;
};

// Per-item draws of Eq. 3: t uniform on 1..T and eps standard normal, seeded by
// (seed, item content) so the loss does not depend on batch order.
struct LossDraw {
  int t = 1;
  NoiseField eps;
  LatentImage y0;
  LatentImage y_t;
};

std::uint64_t sample_key(const PairedSample& sample);
LossDraw draw_loss_terms(const PairedSample& sample, const NoiseSchedule& schedule,
                         std::uint64_t seed);

// Noise predictor with a timestep per item, as used during training.
using TrainingPredictor = std::function<std::vector<NoiseField>(
    std::span<const DepthMap> x, std::span<const LatentImage> y_t, std::span<const int> t)>;

// Mean over batch and pixels of (eps - f(x, y_t, t))^2.
double diffusion_loss(const TrainingPredictor& predict, std::span<const PairedSample> batch,
                      const NoiseSchedule& schedule, std::uint64_t seed);

template <class T>
double diffusion_loss(const Denoiser<T>& model, std::span<const PairedSample> batch,
                      const NoiseSchedule& schedule, std::uint64_t seed);

// Same loss; accumulates its parameter gradient into model.params().grads().
template <class T>
double diffusion_loss_and_grad(Denoiser<T>& model, std::span<const PairedSample> batch,
                               const NoiseSchedule& schedule, std::uint64_t seed);

// Deterministic subset of 0..n-1 holding floor(fraction * n) indices.
std::vector<std::size_t> select_fraction(std::size_t n, double fraction, std::uint64_t seed);

TrainResult train_diffusion(const TrainConfig& config, std::span<const PairedSample> corpus,
                            const DenoiserConfig& model_config, const DenoiserParams* init,
                            const TrainOptions& options = {});

// Loads the "train" split of a pretrain or finetune corpus and trains on it.
TrainResult train_diffusion(const TrainConfig& config, const CorpusManifest& corpus,
                            const DenoiserConfig& model_config, const DenoiserParams* init,
                            const TrainOptions& options = {});

// Generated foregrounds for depth maps, batched, one seed per item.
std::vector<LatentImage> sample_foregrounds(const DenoiserParams& model,
                                            const NoiseSchedule& schedule,
                                            std::span<const DepthMap> depth, std::uint64_t seed,
                                            int batch_size = 16);

}  // namespace tacdiff
