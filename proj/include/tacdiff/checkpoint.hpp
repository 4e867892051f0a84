// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacdiff/denoiser.hpp"
#include "tacdiff/nn/adam.hpp"
#include "tacdiff/schedule.hpp"

namespace tacdiff {

// Linear schedule parameters; enough to rebuild the NoiseSchedule exactly.
struct ScheduleDescriptor {
  int timesteps = 500;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  NoiseSchedule build() const { return make_linear_schedule(timesteps, beta_start, beta_end); }
  friend bool operator==(const ScheduleDescriptor&, const ScheduleDescriptor&) = default;
};

nlohmann::json to_json(const ScheduleDescriptor& s);
ScheduleDescriptor schedule_descriptor_from_json(const nlohmann::json& j);

// File layout: 8-byte magic, u32 version, u64 header length, JSON header
// (config, schedule, training state), u64 parameter count, float32
// parameters, u8 optimizer flag, then Adam step and moment buffers.
struct Checkpoint {
  DenoiserConfig config;
  ScheduleDescriptor schedule;
  nlohmann::json training_state = nlohmann::json::object();
  std::vector<float> params;
  std::optional<nn::AdamState> optimizer;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const DenoiserParams& model, const ScheduleDescriptor& schedule,
                           nlohmann::json training_state = nlohmann::json::object(),
                           const nn::AdamState* optimizer = nullptr);

// Rebuilds the model. When expected is given, a different stored config is a
// ConfigError.
DenoiserParams restore_denoiser(const Checkpoint& checkpoint,
                                const DenoiserConfig* expected = nullptr);

}  // namespace tacdiff
