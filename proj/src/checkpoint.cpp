// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "tacdiff/errors.hpp"

namespace tacdiff {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'C', 'D', 'I', 'F', 'F', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void get(std::ifstream& in, T& v, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw PersistenceError("truncated checkpoint", path);
  }
}

void put_floats(std::ofstream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void get_floats(std::ifstream& in, std::vector<float>& v, std::size_t n, const std::string& path) {
  v.resize(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
    throw PersistenceError("truncated checkpoint", path);
  }
}

}  // namespace

nlohmann::json to_json(const ScheduleDescriptor& s) {
  return {{"kind", "linear"},
          {"timesteps", s.timesteps},
          {"beta_start", s.beta_start},
          {"beta_end", s.beta_end}};
}

ScheduleDescriptor schedule_descriptor_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string("linear")) != "linear") {
    throw ConfigError("only linear schedules are supported");
  }
  ScheduleDescriptor s;
  s.timesteps = j.value("timesteps", s.timesteps);
  s.beta_start = j.value("beta_start", s.beta_start);
  s.beta_end = j.value("beta_end", s.beta_end);
  s.build();  // validates
  return s;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const nlohmann::json header = {{"config", to_json(ck.config)},
                                 {"schedule", to_json(ck.schedule)},
                                 {"training_state", ck.training_state}};
  const std::string text = header.dump();
  // Write to a sibling file first so an interrupted save never clobbers a good checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("cannot write checkpoint", tmp);
    out.write(kMagic, sizeof kMagic);
    put(out, kVersion);
    put(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put(out, static_cast<std::uint64_t>(ck.params.size()));
    put_floats(out, ck.params);
    const std::uint8_t has_opt = ck.optimizer.has_value();
    put(out, has_opt);
    if (has_opt) {
      if (ck.optimizer->m.size() != ck.params.size() || ck.optimizer->v.size() != ck.params.size()) {
        throw ArgumentError("optimizer state does not match parameter count");
      }
      put(out, ck.optimizer->step);
      put_floats(out, ck.optimizer->m);
      put_floats(out, ck.optimizer->v);
    }
    if (!out) throw PersistenceError("cannot write checkpoint", tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw PersistenceError("cannot move checkpoint into place", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError("cannot open checkpoint", path);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw PersistenceError("not a tacdiff checkpoint", path);
  }
  std::uint32_t version = 0;
  get(in, version, path);
  if (version != kVersion) {
    throw PersistenceError("unsupported checkpoint version " + std::to_string(version), path);
  }
  std::uint64_t header_len = 0;
  get(in, header_len, path);
  if (header_len > (1u << 24)) throw PersistenceError("corrupt checkpoint header", path);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw PersistenceError("truncated checkpoint", path);
  }
  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(text);
    ck.config = denoiser_config_from_json(header.at("config"));
    ck.schedule = schedule_descriptor_from_json(header.at("schedule"));
    ck.training_state = header.at("training_state");
  } catch (const nlohmann::json::exception& e) {
    throw PersistenceError(std::string("corrupt checkpoint header (") + e.what() + ")", path);
  }
  std::uint64_t n = 0;
  get(in, n, path);
  get_floats(in, ck.params, n, path);
  std::uint8_t has_opt = 0;
  get(in, has_opt, path);
  if (has_opt) {
    nn::AdamState st;
    get(in, st.step, path);
    get_floats(in, st.m, n, path);
    get_floats(in, st.v, n, path);
    ck.optimizer = std::move(st);
  }
  return ck;
}

Checkpoint make_checkpoint(const DenoiserParams& model, const ScheduleDescriptor& schedule,
                           nlohmann::json training_state, const nn::AdamState* optimizer) {
  Checkpoint ck;
  ck.config = model.config();
  ck.schedule = schedule;
  ck.training_state = std::move(training_state);
  const auto values = model.params().values();
  ck.params.assign(values.begin(), values.end());
  if (optimizer) ck.optimizer = *optimizer;
  return ck;
}

DenoiserParams restore_denoiser(const Checkpoint& ck, const DenoiserConfig* expected) {
  if (expected && !(*expected == ck.config)) {
    throw ConfigError("checkpoint config " + to_json(ck.config).dump() +
                      " does not match expected " + to_json(*expected).dump());
  }
  DenoiserParams model(ck.config);
  auto values = model.params().values();
  if (values.size() != ck.params.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(ck.params.size()) +
                      " parameters, config needs " + std::to_string(values.size()));
  }
  std::copy(ck.params.begin(), ck.params.end(), values.begin());
  if (!model.params().all_finite()) throw ModelHealthError("checkpoint has non-finite parameters");
  return model;
}

}  // namespace tacdiff
