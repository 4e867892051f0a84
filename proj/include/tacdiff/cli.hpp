// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tacdiff/dataset.hpp"

namespace tacdiff::cli {

// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "TACDIFF_OUT";

struct RunConfig {
  std::string subcommand;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;
  std::vector<std::string> overrides;  // "dotted.key=value"
  bool force = false;
  bool full_grid = false;  // simulate: full 180-pose fine-tuning grid
  std::optional<std::filesystem::path> checkpoint;  // sample / compare
  std::optional<std::filesystem::path> generated;   // eval: directory written by sample
  bool verbose = false;
};

// The built-in desk-scale experiment configuration.
nlohmann::json default_experiment_config();

// Defaults, merged with the config file, then --set overrides, then --seed.
nlohmann::json resolve_config(const RunConfig& run);

// Sets a dotted key; the value is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& config, std::string_view assignment);

std::filesystem::path default_output_root();

// Artifact layout below the output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path corpus(CorpusKind kind) const { return root / "corpora" / to_string(kind); }
  std::filesystem::path run(std::string_view stage) const { return root / "runs" / stage; }
  std::filesystem::path checkpoint(std::string_view stage) const {
    return run(stage) / "final.ckpt";
  }
  std::filesystem::path samples() const { return root / "samples"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path compare() const { return root / "compare"; }
};

// Each command returns 0 when every contracted artifact was written (or was
// already present and valid without --force). Errors propagate as exceptions.
int cmd_simulate(const RunConfig& run, std::ostream& log);
int cmd_train(const RunConfig& run, std::ostream& log);
int cmd_finetune(const RunConfig& run, std::ostream& log);
int cmd_sample(const RunConfig& run, std::ostream& log);
int cmd_eval(const RunConfig& run, std::ostream& log);
int cmd_compare(const RunConfig& run, std::ostream& log);

// Parses argv and dispatches; prints errors to stderr and returns the exit code.
int run_cli(int argc, char** argv);

}  // namespace tacdiff::cli
