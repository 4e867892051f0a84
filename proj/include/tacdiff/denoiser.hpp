// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "tacdiff/image.hpp"
#include "tacdiff/nn/layers.hpp"
#include "tacdiff/schedule.hpp"

namespace tacdiff {

// How the scalar noise level fed to the sinusoidal embedding is derived.
// kTimestep embeds the integer t; kAlphaBar embeds 1000 * abar_t instead.
enum class NoiseLevelEncoding { kTimestep, kAlphaBar };

struct DenoiserConfig {
  int height = 64;
  int width = 64;
  int base_channels = 16;
  std::vector<int> channel_multipliers{1, 2, 2};
  int blocks_per_stage = 2;
  int noise_embed_dim = 32;
  int norm_groups = 8;
  // Depth maps are divided by this before entering the network.
  double depth_scale_mm = 2.5;
  NoiseLevelEncoding encoding = NoiseLevelEncoding::kTimestep;

  static constexpr int kCondChannels = 1;
  static constexpr int kImageChannels = 3;

  int stages() const { return static_cast<int>(channel_multipliers.size()); }
  int stage_channels(int s) const { return base_channels * channel_multipliers[s]; }
  // Throws ConfigError when the configuration cannot be built.
  void validate() const;

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

nlohmann::json to_json(const DenoiserConfig& config);
DenoiserConfig denoiser_config_from_json(const nlohmann::json& j);

// Noise level scalars for a batch of timesteps under the configured encoding.
std::vector<double> noise_levels(const DenoiserConfig& config, const NoiseSchedule& schedule,
                                 std::span<const int> timesteps);

// Sinusoidal embedding [sin(l f_k), cos(l f_k)] with f_k = 10000^(-k / (dim/2)).
template <class T>
nn::Tensor<T> sinusoidal_embedding(std::span<const double> levels, int dim);

// Conditional U-Net noise predictor. Input is [depth ; y_t] (4 channels),
// output has the 3 channels of y_t. Every residual block receives the noise
// level embedding as a per-channel bias.
template <class T>
class Denoiser {
 public:
  struct BlockCache {
    nn::Tensor<T> x, g1, a1, u, g2, a2;
    nn::GroupNormStats<T> s1, s2;
  };
  struct Cache {
    nn::Tensor<T> input;
    nn::Tensor<T> emb, temb_h, temb_a, temb, temb_act;
    std::vector<BlockCache> down;
    std::vector<nn::Tensor<T>> down_inputs;
    BlockCache mid;
    std::vector<BlockCache> up;
    std::vector<nn::Tensor<T>> up_inputs;
    nn::Tensor<T> head_in, head_g, head_a;
    nn::GroupNormStats<T> head_stats;
  };

  explicit Denoiser(const DenoiserConfig& config);

  // Deterministic given seed. The output projection starts at zero.
  void initialize(std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  nn::ParameterStore<T>& params() { return store_; }
  const nn::ParameterStore<T>& params() const { return store_; }
  std::size_t parameter_count() const { return store_.size(); }

  // input: N x 4 x H x W, levels: one noise level per item.
  nn::Tensor<T> forward(const nn::Tensor<T>& input, std::span<const double> levels,
                        Cache* cache = nullptr) const;
  // Accumulates parameter gradients for dL/d(output).
  void backward(const Cache& cache, const nn::Tensor<T>& grad_output);

 private:
  struct ResBlock {
    nn::GroupNorm<T> norm1;
    nn::Conv2d<T> conv1;
    nn::Linear<T> level_proj;
    nn::GroupNorm<T> norm2;
    nn::Conv2d<T> conv2;
    bool has_skip = false;
    nn::Conv2d<T> skip;
  };

  ResBlock make_block(const std::string& name, int cin, int cout);
  void init_block(const ResBlock& b, Rng& rng);
  nn::Tensor<T> block_forward(const ResBlock& b, const nn::Tensor<T>& x,
                              const nn::Tensor<T>& temb_act, BlockCache* cache) const;
  nn::Tensor<T> block_backward(const ResBlock& b, const BlockCache& cache,
                               const nn::Tensor<T>& temb_act, const nn::Tensor<T>& dy,
                               nn::Tensor<T>& d_temb_act);

  DenoiserConfig config_;
  nn::ParameterStore<T> store_;
  nn::Linear<T> level_fc1_, level_fc2_;
  nn::Conv2d<T> in_conv_;
  std::vector<ResBlock> down_blocks_;
  std::vector<nn::Conv2d<T>> downsample_;
  ResBlock mid_;
  std::vector<ResBlock> up_blocks_;
  std::vector<nn::Conv2d<T>> upsample_;
  nn::GroupNorm<T> head_norm_;
  nn::Conv2d<T> head_conv_;
};

// Trainable parameters theta together with their configuration.
using DenoiserParams = Denoiser<float>;

DenoiserParams init_denoiser(const DenoiserConfig& config, std::uint64_t seed);

// Packs depth (scaled by config.depth_scale_mm) and y_t into one N x 4 x H x W tensor.
template <class T>
nn::Tensor<T> pack_inputs(const DenoiserConfig& config, std::span<const Image> cond,
                          std::span<const LatentImage> y_t);

// Normalized single-channel condition images from depth maps.
std::vector<Image> normalize_conditions(const DenoiserConfig& config,
                                        std::span<const DepthMap> depth);

// f_theta(x, y_t, t) for one item.
NoiseField predict_noise(const DenoiserParams& params, const DepthMap& x, const LatentImage& y_t,
                         int t, const NoiseSchedule& schedule);

// Batched prediction at a shared timestep; per-item outputs do not depend on
// the batch composition.
std::vector<NoiseField> predict_noise_batch(const DenoiserParams& params,
                                            std::span<const DepthMap> x,
                                            std::span<const LatentImage> y_t, int t,
                                            const NoiseSchedule& schedule);

}  // namespace tacdiff
