// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/diffusion.hpp"

#include <cmath>
#include <string>

#include "tacdiff/errors.hpp"
#include "tacdiff/rng.hpp"

namespace tacdiff {

namespace {

// out = a * x + b * y
LatentImage axpby(double a, const Image& x, double b, const Image& y) {
  LatentImage out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

}  // namespace

LatentImage forward_sample(const LatentImage& y0, int t, const NoiseField& eps,
                           const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  require_same_shape(y0, eps, "forward_sample");
  const double ab = schedule.alpha_bar(t);
  return axpby(std::sqrt(ab), y0, std::sqrt(1.0 - ab), eps);
}

LatentImage iterative_forward(const LatentImage& y0, int t, std::span<const NoiseField> eps_seq,
                              const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  if (eps_seq.size() != static_cast<std::size_t>(t)) {
    throw ArgumentError("iterative_forward: expected " + std::to_string(t) +
                        " noise fields, got " + std::to_string(eps_seq.size()));
  }
  LatentImage y = y0;
  for (int s = 1; s <= t; ++s) {
    const NoiseField& eps = eps_seq[s - 1];
    require_same_shape(y0, eps, "iterative_forward");
    const double b = schedule.beta(s);
    y = axpby(std::sqrt(1.0 - b), y, std::sqrt(b), eps);
  }
  return y;
}

LatentImage estimate_y0(const LatentImage& y_t, int t, const NoiseField& eps_hat,
                        const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  require_same_shape(y_t, eps_hat, "estimate_y0");
  const double ab = schedule.alpha_bar(t);
  const double inv = 1.0 / std::sqrt(ab);
  return axpby(inv, y_t, -inv * std::sqrt(1.0 - ab), eps_hat);
}

Posterior posterior_params(const LatentImage& y_t, const LatentImage& y0, int t,
                           const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  require_same_shape(y_t, y0, "posterior_params");
  const double b = schedule.beta(t);
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const double c_t = (1.0 - ab_prev) / (1.0 - ab) * std::sqrt(1.0 - b);
  const double c_0 = std::sqrt(ab_prev) * b / (1.0 - ab);
  return {axpby(c_t, y_t, c_0, y0), b * (1.0 - ab_prev) / (1.0 - ab)};
}

LatentImage reverse_step(const LatentImage& y_t, int t, const NoiseField& eps_hat,
                         const NoiseField& z, const NoiseSchedule& schedule) {
  schedule.check_timestep(t);
  require_same_shape(y_t, eps_hat, "reverse_step");
  const double b = schedule.beta(t);
  const double ab = schedule.alpha_bar(t);
  const double keep = 1.0 / std::sqrt(1.0 - b);
  LatentImage out = axpby(keep, y_t, -b / (std::sqrt(1.0 - ab) * std::sqrt(1.0 - b)), eps_hat);
  if (t > 1) {
    require_same_shape(y_t, z, "reverse_step");
    const double sigma = schedule.sigma(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * z[i];
  }
  return out;
}

LatentImage ancestral_sample(const NoisePredictor& predict, const DepthMap& x_cond,
                             const Shape& shape, const NoiseSchedule& schedule,
                             std::uint64_t seed) {
  const std::uint64_t seeds[] = {seed};
  BatchNoisePredictor batched = [&](std::span<const DepthMap> x, std::span<const LatentImage> y,
                                    int t) {
    return std::vector<NoiseField>{predict(x[0], y[0], t)};
  };
  return ancestral_sample_batch(batched, std::span<const DepthMap>(&x_cond, 1), shape, schedule,
                                seeds)
      .front();
}

std::vector<LatentImage> ancestral_sample_batch(const BatchNoisePredictor& predict,
                                                std::span<const DepthMap> x_cond,
                                                const Shape& shape,
                                                const NoiseSchedule& schedule,
                                                std::span<const std::uint64_t> seeds) {
  if (x_cond.size() != seeds.size()) {
    throw ArgumentError("ancestral_sample_batch: one seed per condition required");
  }
  std::vector<Rng> rngs;
  std::vector<LatentImage> y;
  rngs.reserve(seeds.size());
  y.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    rngs.emplace_back(s);
    y.push_back(rngs.back().normal_field(shape));
  }
  const NoiseField no_noise(shape);
  for (int t = schedule.timesteps(); t >= 1; --t) {
    std::vector<NoiseField> eps_hat = predict(x_cond, y, t);
    if (eps_hat.size() != y.size()) {
      throw ModelContractError("predictor returned " + std::to_string(eps_hat.size()) +
                               " outputs for a batch of " + std::to_string(y.size()));
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (eps_hat[i].shape() != shape) {
        throw ModelContractError("predictor output shape " + to_string(eps_hat[i].shape()) +
                                 " does not match " + to_string(shape));
      }
      if (t > 1) {
        y[i] = reverse_step(y[i], t, eps_hat[i], rngs[i].normal_field(shape), schedule);
      } else {
        y[i] = reverse_step(y[i], t, eps_hat[i], no_noise, schedule);
      }
    }
  }
  for (auto& img : y) img = img.clamped(-1.0, 1.0);
  return y;
}

}  // namespace tacdiff
