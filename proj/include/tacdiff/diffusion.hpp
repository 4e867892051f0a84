// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tacdiff/image.hpp"
#include "tacdiff/schedule.hpp"

namespace tacdiff {

// Closed-form draw from q(y_t | y_0): sqrt(abar_t) y0 + sqrt(1 - abar_t) eps.
LatentImage forward_sample(const LatentImage& y0, int t, const NoiseField& eps,
                           const NoiseSchedule& schedule);

// Runs the one-step forward chain y_s = sqrt(1 - beta_s) y_{s-1} + sqrt(beta_s) eps_s
// for s = 1..t. eps_seq must hold exactly t fields.
LatentImage iterative_forward(const LatentImage& y0, int t, std::span<const NoiseField> eps_seq,
                              const NoiseSchedule& schedule);

// Clean-image estimate implied by a noise prediction at step t.
LatentImage estimate_y0(const LatentImage& y_t, int t, const NoiseField& eps_hat,
                        const NoiseSchedule& schedule);

struct Posterior {
  LatentImage mean;
  double variance = 0.0;
};

// Gaussian q(y_{t-1} | y_t, y_0).
Posterior posterior_params(const LatentImage& y_t, const LatentImage& y0, int t,
                           const NoiseSchedule& schedule);

// One ancestral step y_t -> y_{t-1}. z is ignored at t = 1.
LatentImage reverse_step(const LatentImage& y_t, int t, const NoiseField& eps_hat,
                         const NoiseField& z, const NoiseSchedule& schedule);

// Noise predictor f(x, y_t, t) for a single condition.
using NoisePredictor =
    std::function<NoiseField(const DepthMap& x_cond, const LatentImage& y_t, int t)>;

// Predicts noise for a batch of conditions at a common timestep.
using BatchNoisePredictor = std::function<std::vector<NoiseField>(
    std::span<const DepthMap> x_cond, std::span<const LatentImage> y_t, int t)>;

// Starts from seeded standard-normal noise and applies reverse_step for
// t = T..1. The returned sample is clamped to [-1, 1].
LatentImage ancestral_sample(const NoisePredictor& predict, const DepthMap& x_cond,
                             const Shape& shape, const NoiseSchedule& schedule,
                             std::uint64_t seed);

// Batched variant: item i uses seeds[i], so every item equals the unbatched
// call with the same seed as long as the predictor is batch independent.
std::vector<LatentImage> ancestral_sample_batch(const BatchNoisePredictor& predict,
                                                std::span<const DepthMap> x_cond,
                                                const Shape& shape,
                                                const NoiseSchedule& schedule,
                                                std::span<const std::uint64_t> seeds);

}  // namespace tacdiff
