// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/denoiser.hpp"

#include <cmath>
#include <string>

#include "tacdiff/errors.hpp"
#include "tacdiff/rng.hpp"

namespace tacdiff {

using nn::Tensor;

void DenoiserConfig::validate() const {
  if (height <= 0 || width <= 0) throw ConfigError("image size must be positive");
  if (base_channels <= 0) throw ConfigError("base_channels must be positive");
  if (channel_multipliers.empty()) throw ConfigError("need at least one resolution stage");
  for (int m : channel_multipliers) {
    if (m <= 0) throw ConfigError("channel multipliers must be positive");
  }
  if (blocks_per_stage < 1) throw ConfigError("blocks_per_stage must be >= 1");
  if (noise_embed_dim < 2 || noise_embed_dim % 2) {
    throw ConfigError("noise_embed_dim must be a positive even number");
  }
  if (norm_groups < 1) throw ConfigError("norm_groups must be >= 1");
  if (!(depth_scale_mm > 0.0)) throw ConfigError("depth_scale_mm must be positive");
  const int factor = 1 << (stages() - 1);
  if (height % factor || width % factor) {
    throw ConfigError("image size " + std::to_string(height) + "x" + std::to_string(width) +
                      " not divisible by 2^(stages-1) = " + std::to_string(factor));
  }
}

nlohmann::json to_json(const DenoiserConfig& c) {
  return {{"height", c.height},
          {"width", c.width},
          {"base_channels", c.base_channels},
          {"channel_multipliers", c.channel_multipliers},
          {"blocks_per_stage", c.blocks_per_stage},
          {"noise_embed_dim", c.noise_embed_dim},
          {"norm_groups", c.norm_groups},
          {"depth_scale_mm", c.depth_scale_mm},
          {"encoding", c.encoding == NoiseLevelEncoding::kTimestep ? "timestep" : "alpha_bar"}};
}

DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
  DenoiserConfig c;
  c.height = j.value("height", c.height);
  c.width = j.value("width", c.width);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.channel_multipliers = j.value("channel_multipliers", c.channel_multipliers);
  c.blocks_per_stage = j.value("blocks_per_stage", c.blocks_per_stage);
  c.noise_embed_dim = j.value("noise_embed_dim", c.noise_embed_dim);
  c.norm_groups = j.value("norm_groups", c.norm_groups);
  c.depth_scale_mm = j.value("depth_scale_mm", c.depth_scale_mm);
  const std::string enc = j.value("encoding", std::string("timestep"));
  if (enc == "timestep") {
    c.encoding = NoiseLevelEncoding::kTimestep;
  } else if (enc == "alpha_bar") {
    c.encoding = NoiseLevelEncoding::kAlphaBar;
  } else {
    throw ConfigError("unknown noise level encoding '" + enc + "'");
  }
  c.validate();
  return c;
}

std::vector<double> noise_levels(const DenoiserConfig& config, const NoiseSchedule& schedule,
                                 std::span<const int> timesteps) {
  std::vector<double> levels;
  levels.reserve(timesteps.size());
  for (int t : timesteps) {
    schedule.check_timestep(t);
    levels.push_back(config.encoding == NoiseLevelEncoding::kTimestep
                         ? static_cast<double>(t)
                         : 1000.0 * schedule.alpha_bar(t));
  }
  return levels;
}

template <class T>
Tensor<T> sinusoidal_embedding(std::span<const double> levels, int dim) {
  const int half = dim / 2;
  Tensor<T> emb(static_cast<int>(levels.size()), dim, 1, 1);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / half);
      emb.at(static_cast<int>(i), k, 0, 0) = static_cast<T>(std::sin(levels[i] * freq));
      emb.at(static_cast<int>(i), k + half, 0, 0) = static_cast<T>(std::cos(levels[i] * freq));
    }
  }
  return emb;
}

template <class T>
Denoiser<T>::Denoiser(const DenoiserConfig& config) : config_(config) {
  config_.validate();
  const int e = config_.noise_embed_dim;
  const int stages = config_.stages();
  const int blocks = config_.blocks_per_stage;

  level_fc1_ = nn::Linear<T>(store_, "level.fc1", e, e);
  level_fc2_ = nn::Linear<T>(store_, "level.fc2", e, e);
  in_conv_ = nn::Conv2d<T>(store_, "in_conv",
                           DenoiserConfig::kCondChannels + DenoiserConfig::kImageChannels,
                           config_.stage_channels(0), 3);
  int ch = config_.stage_channels(0);
  for (int s = 0; s < stages; ++s) {
    const int out = config_.stage_channels(s);
    for (int b = 0; b < blocks; ++b) {
      down_blocks_.push_back(
          make_block("down." + std::to_string(s) + "." + std::to_string(b), ch, out));
      ch = out;
    }
    if (s + 1 < stages) {
      downsample_.emplace_back(store_, "down." + std::to_string(s) + ".downsample", ch, ch, 3, 2);
    }
  }
  mid_ = make_block("mid", ch, ch);
  for (int s = stages - 1; s >= 0; --s) {
    const int out = config_.stage_channels(s);
    for (int b = 0; b < blocks; ++b) {
      up_blocks_.push_back(
          make_block("up." + std::to_string(s) + "." + std::to_string(b), ch + out, out));
      ch = out;
    }
    if (s > 0) {
      upsample_.emplace_back(store_, "up." + std::to_string(s) + ".upsample", ch,
                             config_.stage_channels(s - 1), 3, 1);
      ch = config_.stage_channels(s - 1);
    }
  }
  head_norm_ = nn::GroupNorm<T>(store_, "head.norm", ch, nn::group_count(ch, config_.norm_groups));
  head_conv_ = nn::Conv2d<T>(store_, "head.conv", ch, DenoiserConfig::kImageChannels, 3);
}

template <class T>
typename Denoiser<T>::ResBlock Denoiser<T>::make_block(const std::string& name, int cin, int cout) {
  ResBlock b;
  b.norm1 = nn::GroupNorm<T>(store_, name + ".norm1", cin, nn::group_count(cin, config_.norm_groups));
  b.conv1 = nn::Conv2d<T>(store_, name + ".conv1", cin, cout, 3);
  b.level_proj = nn::Linear<T>(store_, name + ".level_proj", config_.noise_embed_dim, cout);
  b.norm2 =
      nn::GroupNorm<T>(store_, name + ".norm2", cout, nn::group_count(cout, config_.norm_groups));
  b.conv2 = nn::Conv2d<T>(store_, name + ".conv2", cout, cout, 3);
  b.has_skip = cin != cout;
  if (b.has_skip) b.skip = nn::Conv2d<T>(store_, name + ".skip", cin, cout, 1);
  return b;
}

template <class T>
void Denoiser<T>::init_block(const ResBlock& b, Rng& rng) {
  b.norm1.init(store_);
  b.conv1.init(store_, rng);
  b.level_proj.init(store_, rng);
  b.norm2.init(store_);
  // Residual branches start as identity maps.
  b.conv2.init(store_, rng, /*zero_init=*/true);
  if (b.has_skip) b.skip.init(store_, rng);
}

template <class T>
void Denoiser<T>::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x1417}));
  level_fc1_.init(store_, rng);
  level_fc2_.init(store_, rng);
  in_conv_.init(store_, rng);
  for (const auto& b : down_blocks_) init_block(b, rng);
  for (const auto& d : downsample_) d.init(store_, rng);
  init_block(mid_, rng);
  for (const auto& b : up_blocks_) init_block(b, rng);
  for (const auto& u : upsample_) u.init(store_, rng);
  head_norm_.init(store_);
  head_conv_.init(store_, rng, /*zero_init=*/true);
}

template <class T>
Tensor<T> Denoiser<T>::block_forward(const ResBlock& b, const Tensor<T>& x,
                                     const Tensor<T>& temb_act, BlockCache* cache) const {
  BlockCache local;
  BlockCache& c = cache ? *cache : local;
  c.g1 = b.norm1.forward(store_, x, &c.s1);
  c.a1 = nn::silu(c.g1);
  c.u = b.conv1.forward(store_, c.a1);
  nn::add_channel_bias(c.u, b.level_proj.forward(store_, temb_act));
  c.g2 = b.norm2.forward(store_, c.u, &c.s2);
  c.a2 = nn::silu(c.g2);
  Tensor<T> out = b.conv2.forward(store_, c.a2);
  if (b.has_skip) {
    out += b.skip.forward(store_, x);
  } else {
    out += x;
  }
  if (cache) {
    c.x = x;
  }
  return out;
}

template <class T>
Tensor<T> Denoiser<T>::block_backward(const ResBlock& b, const BlockCache& c,
                                      const Tensor<T>& temb_act, const Tensor<T>& dy,
                                      Tensor<T>& d_temb_act) {
  Tensor<T> dx = b.has_skip ? b.skip.backward(store_, c.x, dy) : dy;
  Tensor<T> g = b.conv2.backward(store_, c.a2, dy);
  g = nn::silu_backward(c.g2, g);
  g = b.norm2.backward(store_, c.u, g, c.s2);
  d_temb_act += b.level_proj.backward(store_, temb_act, nn::channel_bias_backward(g));
  g = b.conv1.backward(store_, c.a1, g);
  g = nn::silu_backward(c.g1, g);
  dx += b.norm1.backward(store_, c.x, g, c.s1);
  return dx;
}

template <class T>
Tensor<T> Denoiser<T>::forward(const Tensor<T>& input, std::span<const double> levels,
                               Cache* cache) const {
  if (input.c() != DenoiserConfig::kCondChannels + DenoiserConfig::kImageChannels ||
      input.h() != config_.height || input.w() != config_.width) {
    throw ArgumentError("denoiser input " + input.shape_string() + " does not match config " +
                        std::to_string(config_.height) + "x" + std::to_string(config_.width));
  }
  if (levels.size() != static_cast<std::size_t>(input.n())) {
    throw ArgumentError("one noise level per batch item required");
  }
  const int stages = config_.stages();
  const int blocks = config_.blocks_per_stage;
  Cache local;
  Cache& c = cache ? *cache : local;
  const bool keep = cache != nullptr;

  c.emb = sinusoidal_embedding<T>(levels, config_.noise_embed_dim);
  c.temb_h = level_fc1_.forward(store_, c.emb);
  c.temb_a = nn::silu(c.temb_h);
  c.temb = level_fc2_.forward(store_, c.temb_a);
  c.temb_act = nn::silu(c.temb);

  if (keep) {
    c.input = input;
    c.down.assign(down_blocks_.size(), {});
    c.down_inputs.assign(downsample_.size(), {});
    c.up.assign(up_blocks_.size(), {});
    c.up_inputs.assign(upsample_.size(), {});
  }

  Tensor<T> h = in_conv_.forward(store_, input);
  std::vector<Tensor<T>> skips;
  for (int s = 0, k = 0; s < stages; ++s) {
    for (int b = 0; b < blocks; ++b, ++k) {
      h = block_forward(down_blocks_[k], h, c.temb_act, keep ? &c.down[k] : nullptr);
      skips.push_back(h);
    }
    if (s + 1 < stages) {
      if (keep) c.down_inputs[s] = h;
      h = downsample_[s].forward(store_, h);
    }
  }
  h = block_forward(mid_, h, c.temb_act, keep ? &c.mid : nullptr);
  for (int s = stages - 1, k = 0, u = 0; s >= 0; --s) {
    for (int b = 0; b < blocks; ++b, ++k) {
      h = block_forward(up_blocks_[k], nn::concat_channels(h, skips.back()), c.temb_act,
                        keep ? &c.up[k] : nullptr);
      skips.pop_back();
    }
    if (s > 0) {
      Tensor<T> up = nn::upsample2(h);
      h = upsample_[u].forward(store_, up);
      if (keep) c.up_inputs[u] = std::move(up);
      ++u;
    }
  }
  if (keep) c.head_in = h;
  Tensor<T> g = head_norm_.forward(store_, h, keep ? &c.head_stats : nullptr);
  Tensor<T> a = nn::silu(g);
  Tensor<T> out = head_conv_.forward(store_, a);
  if (keep) {
    c.head_g = std::move(g);
    c.head_a = std::move(a);
  }
  return out;
}

template <class T>
void Denoiser<T>::backward(const Cache& c, const Tensor<T>& grad_output) {
  const int stages = config_.stages();
  const int blocks = config_.blocks_per_stage;
  Tensor<T> d_temb_act(c.temb_act.n(), c.temb_act.c(), 1, 1);

  Tensor<T> g = head_conv_.backward(store_, c.head_a, grad_output);
  g = nn::silu_backward(c.head_g, g);
  g = head_norm_.backward(store_, c.head_in, g, c.head_stats);

  // Up path in reverse; skip gradients are parked by skip index.
  const int total = stages * blocks;
  std::vector<Tensor<T>> d_skips(total);
  int k = total - 1;
  int u = static_cast<int>(upsample_.size()) - 1;
  for (int s = 0; s < stages; ++s) {
    if (s > 0) {
      g = nn::upsample2_backward(upsample_[u].backward(store_, c.up_inputs[u], g));
      --u;
    }
    for (int b = blocks - 1; b >= 0; --b, --k) {
      const BlockCache& bc = c.up[k];
      Tensor<T> dcat = block_backward(up_blocks_[k], bc, c.temb_act, g, d_temb_act);
      const int h_channels = bc.x.c() - up_blocks_[k].conv1.out_channels();
      // up block k consumed skip number (total - 1 - k)
      nn::split_channels(dcat, h_channels, &g, &d_skips[total - 1 - k]);
    }
  }

  g = block_backward(mid_, c.mid, c.temb_act, g, d_temb_act);

  k = total - 1;
  for (int s = stages - 1; s >= 0; --s) {
    if (s + 1 < stages) g = downsample_[s].backward(store_, c.down_inputs[s], g);
    for (int b = blocks - 1; b >= 0; --b, --k) {
      g += d_skips[k];
      g = block_backward(down_blocks_[k], c.down[k], c.temb_act, g, d_temb_act);
    }
  }
  in_conv_.backward(store_, c.input, g, /*need_input_grad=*/false);

  Tensor<T> dt = nn::silu_backward(c.temb, d_temb_act);
  dt = level_fc2_.backward(store_, c.temb_a, dt);
  dt = nn::silu_backward(c.temb_h, dt);
  level_fc1_.backward(store_, c.emb, dt);
}

DenoiserParams init_denoiser(const DenoiserConfig& config, std::uint64_t seed) {
  DenoiserParams params(config);
  params.initialize(seed);
  return params;
}

std::vector<Image> normalize_conditions(const DenoiserConfig& config,
                                        std::span<const DepthMap> depth) {
  std::vector<Image> out;
  out.reserve(depth.size());
  for (const DepthMap& d : depth) out.push_back(d.normalized(config.depth_scale_mm));
  return out;
}

template <class T>
Tensor<T> pack_inputs(const DenoiserConfig& config, std::span<const Image> cond,
                      std::span<const LatentImage> y_t) {
  if (cond.size() != y_t.size() || cond.empty()) {
    throw ArgumentError("pack_inputs: need matching, non-empty condition and state batches");
  }
  const int n = static_cast<int>(cond.size());
  Tensor<T> input(n, DenoiserConfig::kCondChannels + DenoiserConfig::kImageChannels,
                  config.height, config.width);
  const std::size_t plane = static_cast<std::size_t>(config.height) * config.width;
  for (int i = 0; i < n; ++i) {
    const Image& x = cond[i];
    const LatentImage& y = y_t[i];
    if (x.channels() != DenoiserConfig::kCondChannels || x.height() != config.height ||
        x.width() != config.width) {
      throw ArgumentError("condition " + to_string(x.shape()) + " does not match model size");
    }
    if (y.channels() != DenoiserConfig::kImageChannels || y.height() != x.height() ||
        y.width() != x.width()) {
      throw ArgumentError("state " + to_string(y.shape()) + " does not match condition " +
                          to_string(x.shape()));
    }
    T* dst = input.sample(i);
    for (std::size_t j = 0; j < plane; ++j) dst[j] = static_cast<T>(x[j]);
    for (std::size_t j = 0; j < y.size(); ++j) dst[plane + j] = static_cast<T>(y[j]);
  }
  return input;
}

std::vector<NoiseField> predict_noise_batch(const DenoiserParams& params,
                                            std::span<const DepthMap> x,
                                            std::span<const LatentImage> y_t, int t,
                                            const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  const DenoiserConfig& cfg = params.config();
  for (std::size_t i = 0; i < x.size() && i < y_t.size(); ++i) {
    if (x[i].height() != y_t[i].height() || x[i].width() != y_t[i].width()) {
      throw ArgumentError("depth map and state differ in spatial size");
    }
  }
  const std::vector<Image> cond = normalize_conditions(cfg, x);
  const Tensor<float> input = pack_inputs<float>(cfg, cond, y_t);
  const std::vector<int> ts(x.size(), t);
  const std::vector<double> levels = noise_levels(cfg, schedule, ts);
  const Tensor<float> out = params.forward(input, levels);
  std::vector<NoiseField> result;
  result.reserve(x.size());
  for (int i = 0; i < out.n(); ++i) {
    NoiseField eps(DenoiserConfig::kImageChannels, cfg.height, cfg.width);
    const float* src = out.sample(i);
    for (std::size_t j = 0; j < eps.size(); ++j) eps[j] = src[j];
    if (!eps.all_finite()) throw ModelHealthError("denoiser produced non-finite output");
    result.push_back(std::move(eps));
  }
  return result;
}

NoiseField predict_noise(const DenoiserParams& params, const DepthMap& x, const LatentImage& y_t,
                         int t, const NoiseSchedule& schedule) {
  return predict_noise_batch(params, std::span<const DepthMap>(&x, 1),
                             std::span<const LatentImage>(&y_t, 1), t, schedule)
      .front();
}

template class Denoiser<float>;
template class Denoiser<double>;
template Tensor<float> sinusoidal_embedding<float>(std::span<const double>, int);
template Tensor<double> sinusoidal_embedding<double>(std::span<const double>, int);
template Tensor<float> pack_inputs<float>(const DenoiserConfig&, std::span<const Image>,
                                          std::span<const LatentImage>);
template Tensor<double> pack_inputs<double>(const DenoiserConfig&, std::span<const Image>,
                                            std::span<const LatentImage>);

}  // namespace tacdiff
