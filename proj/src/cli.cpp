// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "tacdiff/checkpoint.hpp"
#include "tacdiff/denoiser.hpp"
#include "tacdiff/errors.hpp"
#include "tacdiff/evaluation.hpp"
#include "tacdiff/png_io.hpp"
#include "tacdiff/training.hpp"

namespace tacdiff::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSampleIndex = "index.json";

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw PersistenceError("cannot open", path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw PersistenceError("cannot write", path.string());
}

void require(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw ConfigError("missing " + what + ": " + path.string() + " (run the earlier stage first)");
  }
}

SensorSpec sensor_from_json(const nlohmann::json& j) {
  SensorSpec s = default_sensor(j.value("height", 64), j.value("width", 64));
  s.gel_width_mm = j.value("gel_width_mm", s.gel_width_mm);
  s.gel_height_mm = j.value("gel_height_mm", s.gel_height_mm);
  s.max_penetration_mm = j.value("max_penetration_mm", s.max_penetration_mm);
  s.diffuse = j.value("diffuse", s.diffuse);
  s.specular = j.value("specular", s.specular);
  s.shininess = j.value("shininess", s.shininess);
  s.slope_gain = j.value("slope_gain", s.slope_gain);
  s.lights = tricolor_lights(j.value("light_elevation_deg", 35.0));
  s.background = make_background(s.height, s.width, j.value("background_variant", 0));
  s.validate();
  return s;
}

TrainConfig stage_config(const nlohmann::json& cfg, const char* stage) {
  nlohmann::json j = cfg.at(stage);
  j["seed"] = cfg.at("seed");
  return train_config_from_json(j);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int run_training(const RunConfig& run, std::ostream& log, const char* stage, CorpusKind kind,
                 const fs::path* init_checkpoint) {
  const auto cfg = resolve_config(run);
  const Layout layout{run.out_dir};
  const fs::path out = layout.run(stage);
  const fs::path final_ckpt = out / "final.ckpt";
  if (fs::exists(final_ckpt) && !run.force) {
    load_checkpoint(final_ckpt.string());
    log << stage << ": " << final_ckpt.string() << " exists, skipping (use --force to retrain)\n";
    return 0;
  }
  require(layout.corpus(kind) / kManifestName, to_string(kind) + " corpus");
  const auto manifest = read_manifest(layout.corpus(kind));
  const DenoiserConfig model_cfg = denoiser_config_from_json(cfg.at("model"));
  const TrainConfig tc = stage_config(cfg, stage);

  std::optional<DenoiserParams> init;
  if (init_checkpoint) {
    require(*init_checkpoint, "pretrained checkpoint");
    const Checkpoint ck = load_checkpoint(init_checkpoint->string());
    if (!(ck.schedule == tc.schedule)) {
      throw ConfigError("pretrained checkpoint uses a different noise schedule");
    }
    init = restore_denoiser(ck, &model_cfg);
  }
  if (run.force) fs::remove_all(out);
  TrainOptions opt;
  opt.out_dir = out;
  opt.verbose = run.verbose;
  const auto result = train_diffusion(tc, manifest, model_cfg, init ? &*init : nullptr, opt);
  const auto& m = result.log.epoch_mean_losses;
  const std::size_t n_train = manifest.count("train");
  log << stage << ": " << result.log.step_losses.size() << " steps on "
      << select_fraction(n_train, tc.data_fraction, tc.seed).size() << " of " << n_train
      << " train pairs, loss "
      << fmt("%.5f", m.front()) << " -> " << fmt("%.5f", m.back()) << " in "
      << fmt("%.1f", result.log.wall_seconds) << " s, checkpoint " << result.log.final_checkpoint
      << "\n";
  return 0;
}

}  // namespace

nlohmann::json default_experiment_config() {
  TrainConfig pretrain;
  pretrain.epochs = 12;
  pretrain.batch_size = 8;
  pretrain.learning_rate = 5e-4;
  pretrain.schedule.timesteps = 100;
  pretrain.checkpoint_every_epochs = 1;
  TrainConfig finetune = pretrain;
  finetune.epochs = 60;
  finetune.data_fraction = 0.2;
  HarnessConfig harness;
  return {{"seed", 1234},
          {"sensor",
           {{"height", 64}, {"width", 64}, {"gel_width_mm", 16.0}, {"gel_height_mm", 16.0},
            {"max_penetration_mm", 2.5}, {"background_variant", 0}}},
          {"corpus", to_json(CorpusConfig{})},
          {"model", to_json(DenoiserConfig{})},
          {"pretrain", to_json(pretrain)},
          {"finetune", to_json(finetune)},
          {"sample", {{"count", 30}, {"batch_size", 16}, {"split", "test"}}},
          {"harness", to_json(harness)}};
}

void apply_override(nlohmann::json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ArgumentError("override must look like key=value: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  nlohmann::json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ArgumentError("malformed override key: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (!node->is_object() && !node->is_null()) {
      throw ArgumentError("override key " + key + " descends into a non-object");
    }
    start = dot + 1;
  }
}

nlohmann::json resolve_config(const RunConfig& run) {
  nlohmann::json cfg = default_experiment_config();
  if (run.config_path) cfg.merge_patch(read_json(*run.config_path));
  for (const auto& o : run.overrides) apply_override(cfg, o);
  if (run.seed) cfg["seed"] = *run.seed;
  return cfg;
}

fs::path default_output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("tacdiff_out");
}

int cmd_simulate(const RunConfig& run, std::ostream& log) {
  auto cfg = resolve_config(run);
  if (run.full_grid) {
    const auto grid = full_finetune_grid();
    cfg["corpus"]["finetune_grid"] = {{"xy_step_mm", grid.xy_step_mm},
                                      {"xy_count", grid.xy_count},
                                      {"z_start_mm", grid.z_start_mm},
                                      {"z_step_mm", grid.z_step_mm},
                                      {"z_count", grid.z_count},
                                      {"yaws_deg", grid.yaws_deg}};
    cfg["corpus"]["finetune_per_char"] = 0;
    cfg["corpus"]["exclude_classifier_poses"] = false;
  }
  const SensorSpec sensor = sensor_from_json(cfg.at("sensor"));
  const CorpusConfig cc = corpus_config_from_json(cfg.at("corpus"));
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const Layout layout{run.out_dir};
  for (auto kind : {CorpusKind::kPretrain, CorpusKind::kFinetune, CorpusKind::kClassifierTrain,
                    CorpusKind::kClassifierTest}) {
    const fs::path dir = layout.corpus(kind);
    if (fs::exists(dir / kManifestName) && !run.force) {
      const auto existing = read_manifest(dir);
      const SensorSpec s = corpus_sensor(kind, sensor, cc);
      if (existing.seed == seed && existing.generation == to_json(cc) &&
          existing.sensor_hash == s.hash()) {
        log << to_string(kind) << ": up to date (" << existing.samples.size() << " pairs, "
            << existing.content_hash.substr(0, 12) << ")\n";
        continue;
      }
      throw ConfigError(dir.string() + " holds a corpus with different settings; use --force");
    }
    if (run.force) fs::remove_all(dir);
    const auto m = build_corpus(kind, sensor, cc, seed, dir);
    log << to_string(kind) << ": " << m.samples.size() << " pairs (" << m.count("train")
        << " train / " << m.count("test") << " test) -> " << dir.string() << " "
        << m.content_hash.substr(0, 12) << "\n";
  }
  return 0;
}

int cmd_train(const RunConfig& run, std::ostream& log) {
  return run_training(run, log, "pretrain", CorpusKind::kPretrain, nullptr);
}

int cmd_finetune(const RunConfig& run, std::ostream& log) {
  const fs::path init = Layout{run.out_dir}.checkpoint("pretrain");
  return run_training(run, log, "finetune", CorpusKind::kFinetune, &init);
}

int cmd_sample(const RunConfig& run, std::ostream& log) {
  const auto cfg = resolve_config(run);
  const Layout layout{run.out_dir};
  const fs::path out = layout.samples();
  if (fs::exists(out / kSampleIndex) && !run.force) {
    log << "sample: " << (out / kSampleIndex).string() << " exists, skipping\n";
    return 0;
  }
  const fs::path ckpt = run.checkpoint.value_or(layout.checkpoint("finetune"));
  require(ckpt, "diffusion checkpoint");
  const fs::path corpus_dir = layout.corpus(CorpusKind::kFinetune);
  require(corpus_dir / kManifestName, "finetune corpus");
  const auto& sc = cfg.at("sample");
  const std::string split = sc.value("split", std::string("test"));
  const int count = sc.value("count", 30);
  const int batch = sc.value("batch_size", 16);

  const Checkpoint ck = load_checkpoint(ckpt.string());
  const DenoiserParams model = restore_denoiser(ck);
  const auto manifest = read_manifest(corpus_dir);
  auto samples = load_corpus(manifest, split);
  if (samples.empty()) throw ConfigError("finetune corpus has no '" + split + "' samples");
  if (count > 0 && static_cast<std::size_t>(count) < samples.size()) samples.resize(count);

  std::vector<DepthMap> depth;
  for (const auto& s : samples) depth.push_back(s.depth);
  const auto t0 = std::chrono::steady_clock::now();
  const auto fg = sample_foregrounds(model, ck.schedule.build(), depth,
                                     cfg.at("seed").get<std::uint64_t>(), batch);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (run.force) fs::remove_all(out);
  fs::create_directories(out / "generated");
  // Index of the samples that were drawn, so eval can pair them with targets.
  std::vector<std::size_t> corpus_index;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    if (manifest.samples[i].split == split) corpus_index.push_back(i);
  }
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < fg.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "generated/%06zu.png", i);
    write_rgb_png((out / name).string(), composite_background(fg[i], *samples[i].background));
    // Paths are relative to the output root so the bundle can be moved.
    const auto& rec = manifest.samples[corpus_index[i]];
    const fs::path corpus_rel = corpus_dir.lexically_relative(run.out_dir);
    items.push_back({{"generated", name},
                     {"target", (corpus_rel / rec.target_path).generic_string()},
                     {"depth", (corpus_rel / rec.depth_path).generic_string()},
                     {"object_id", rec.object_id}});
  }
  const nlohmann::json index = {{"checkpoint", ckpt.lexically_relative(run.out_dir).generic_string()},
                                {"timesteps", ck.schedule.timesteps},
                                {"depth_full_scale_mm", manifest.depth_full_scale_mm},
                                {"wall_seconds", wall},
                                {"items", items}};
  write_text(out / kSampleIndex, index.dump(1) + "\n");
  log << "sample: " << fg.size() << " images with T=" << ck.schedule.timesteps << " in "
      << fmt("%.2f", wall) << " s wall-clock -> " << out.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& run, std::ostream& log) {
  const Layout layout{run.out_dir};
  const fs::path samples_dir = run.generated.value_or(layout.samples());
  const fs::path out = layout.eval();
  if (fs::exists(out / "similarity.json") && !run.force) {
    log << "eval: " << (out / "similarity.json").string() << " exists, skipping\n";
    return 0;
  }
  require(samples_dir / kSampleIndex, "sample index");
  const auto index = read_json(samples_dir / kSampleIndex);
  const double full_scale = index.at("depth_full_scale_mm").get<double>();
  std::vector<TactileImage> gen, tgt;
  std::vector<DepthMap> depth;
  std::vector<std::string> ids;
  for (const auto& it : index.at("items")) {
    gen.push_back(read_rgb_png((samples_dir / it.at("generated").get<std::string>()).string()));
    tgt.push_back(read_rgb_png((layout.root / it.at("target").get<std::string>()).string()));
    depth.push_back(
        read_depth_png((layout.root / it.at("depth").get<std::string>()).string(), full_scale));
    ids.push_back(it.value("object_id", std::to_string(ids.size())));
  }
  const auto report = similarity_report(gen, tgt, ids);
  if (run.force) fs::remove_all(out);
  emit_panels(depth, tgt, gen, full_scale, out / "panels");
  write_text(out / "similarity.json", to_json(report).dump(1) + "\n");
  log << "eval: " << gen.size() << " pairs, mean SSIM " << fmt("%.4f", report.mean_ssim)
      << ", mean MSE " << fmt("%.2f", report.mean_mse) << " (0-255 units) -> " << out.string()
      << "\n";
  return 0;
}

int cmd_compare(const RunConfig& run, std::ostream& log) {
  const auto cfg = resolve_config(run);
  const Layout layout{run.out_dir};
  const fs::path out = layout.compare();
  if (fs::exists(out / "report.json") && !run.force) {
    log << "compare: " << (out / "report.json").string() << " exists, skipping\n";
    return 0;
  }
  HarnessConfig hc = harness_config_from_json(cfg.at("harness"));
  hc.seed = cfg.at("seed").get<std::uint64_t>();
  const fs::path ckpt = run.checkpoint.value_or(layout.checkpoint("finetune"));
  const auto report = run_comparison(hc, layout.corpus(CorpusKind::kClassifierTrain),
                                     layout.corpus(CorpusKind::kClassifierTest), ckpt);
  const std::string text = format_report(report);
  write_text(out / "report.txt", text);
  write_text(out / "report.json", to_json(report).dump(1) + "\n");
  log << text;
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Conditional diffusion for simulated tactile images"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig run;
  std::string config_path, out_dir, checkpoint, generated;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed propagated to every stage");
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, std::string("Output directory (default $") + kOutputRootEnv +
                                       " or ./tacdiff_out)");
  app.add_option("--set", run.overrides, "Override a config value, e.g. pretrain.epochs=3");
  app.add_flag("--force", run.force, "Regenerate outputs that already exist");
  app.add_flag("-v,--verbose", run.verbose, "Per-epoch progress on stderr");

  auto* sim = app.add_subcommand("simulate", "Render the four paired corpora");
  sim->add_flag("--full-grid", run.full_grid,
                "Use the full 3x3x4x5 fine-tuning grid (180 poses per character)");
  app.add_subcommand("train", "Pretrain the denoiser on primitive contacts");
  app.add_subcommand("finetune", "Fine-tune the pretrained denoiser on braille pairs");
  auto* sample = app.add_subcommand("sample", "Generate tactile images for held-out depth maps");
  sample->add_option("--checkpoint", checkpoint, "Checkpoint to sample from");
  auto* eval = app.add_subcommand("eval", "SSIM / MSE of generated images and comparison panels");
  eval->add_option("--generated", generated, "Directory written by 'sample'");
  auto* compare = app.add_subcommand("compare", "Braille classifier comparison across data sources");
  compare->add_option("--checkpoint", checkpoint, "Fine-tuned diffusion checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  run.subcommand = app.get_subcommands().front()->get_name();
  if (!config_path.empty()) run.config_path = config_path;
  if (*seed_opt) run.seed = seed;
  run.out_dir = out_dir.empty() ? default_output_root() : fs::path(out_dir);
  if (!checkpoint.empty()) run.checkpoint = checkpoint;
  if (!generated.empty()) run.generated = generated;

  try {
    std::error_code ec;
    fs::create_directories(run.out_dir, ec);
    if (ec) throw PersistenceError("cannot create output directory", run.out_dir.string());
    if (run.subcommand == "simulate") return cmd_simulate(run, std::cout);
    if (run.subcommand == "train") return cmd_train(run, std::cout);
    if (run.subcommand == "finetune") return cmd_finetune(run, std::cout);
    if (run.subcommand == "sample") return cmd_sample(run, std::cout);
    if (run.subcommand == "eval") return cmd_eval(run, std::cout);
    if (run.subcommand == "compare") return cmd_compare(run, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "tacdiff " << run.subcommand << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tacdiff::cli
