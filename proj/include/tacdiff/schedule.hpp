// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace tacdiff {

// Variance schedule of the forward process. Timesteps are 1-based:
// beta(t), alpha_bar(t) and sigma(t) are defined for t = 1..T, and
// alpha_bar(0) is the empty product 1.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  // Builds the derived sequences from an explicit beta sequence.
  explicit NoiseSchedule(std::vector<double> betas);

  int timesteps() const { return static_cast<int>(betas_.size()); }

  double beta(int t) const;
  double alpha_bar(int t) const;  // valid for t = 0..T
  // Posterior standard deviation sqrt(beta_t (1 - abar_{t-1}) / (1 - abar_t)); sigma(1) == 0.
  double sigma(int t) const;

  std::span<const double> betas() const { return betas_; }
  std::span<const double> alphas_bar() const { return alphas_bar_; }
  std::span<const double> sigmas() const { return sigmas_; }

  // Throws IndexError unless 1 <= t <= T.
  void check_timestep(int t) const;

  // Descriptor used by checkpoints to reject mismatched schedules.
  double beta_start() const { return betas_.front(); }
  double beta_end() const { return betas_.back(); }

 private:
  std::vector<double> betas_;
  std::vector<double> alphas_bar_;
  std::vector<double> sigmas_;
};

// Betas linearly spaced from beta_start to beta_end inclusive.
// Requires 0 < beta_start <= beta_end < 1 and T >= 1.
NoiseSchedule make_linear_schedule(int timesteps, double beta_start, double beta_end);

}  // namespace tacdiff
