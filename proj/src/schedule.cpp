// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/schedule.hpp"

#include <cmath>
#include <string>

#include "tacdiff/errors.hpp"

namespace tacdiff {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw ConfigError("noise schedule needs at least one timestep");
  alphas_bar_.resize(betas_.size());
  sigmas_.resize(betas_.size());
  double running = 1.0;
  for (std::size_t i = 0; i < betas_.size(); ++i) {
    const double b = betas_[i];
    if (!(b > 0.0 && b < 1.0)) {
      throw ConfigError("beta_" + std::to_string(i + 1) + " must lie in (0, 1)");
    }
    const double prev = running;
    running *= 1.0 - b;
    alphas_bar_[i] = running;
    sigmas_[i] = i == 0 ? 0.0 : std::sqrt(b * (1.0 - prev) / (1.0 - running));
  }
}

void NoiseSchedule::check_timestep(int t) const {
  if (t < 1 || t > timesteps()) {
    throw IndexError("timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(timesteps()) + "]");
  }
}

double NoiseSchedule::beta(int t) const {
  check_timestep(t);
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  check_timestep(t);
  return alphas_bar_[t - 1];
}

double NoiseSchedule::sigma(int t) const {
  check_timestep(t);
  return sigmas_[t - 1];
}

NoiseSchedule make_linear_schedule(int timesteps, double beta_start, double beta_end) {
  if (timesteps < 1) throw ConfigError("schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ConfigError("linear schedule requires 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(timesteps);
  if (timesteps == 1) {
    betas[0] = beta_start;
  } else {
    const double step = (beta_end - beta_start) / (timesteps - 1);
    for (int i = 0; i < timesteps; ++i) betas[i] = beta_start + step * i;
    betas.back() = beta_end;
  }
  return NoiseSchedule(std::move(betas));
}

}  // namespace tacdiff
