// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tacdiff/errors.hpp"
#include "tacdiff/hashing.hpp"
#include "tacdiff/png_io.hpp"
#include "tacdiff/rng.hpp"

namespace tacdiff {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPretrainStream = 0x9e7a;
constexpr std::uint64_t kFinetuneStream = 0xf17e;
constexpr std::uint64_t kClassifierStream = 0xc1a5;
constexpr std::uint64_t kSplitStream = 0x5b17;

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.png", i);
  return buf;
}

nlohmann::json grid_to_json(const PoseGridSpec& g) {
  return {{"xy_step_mm", g.xy_step_mm}, {"xy_count", g.xy_count}, {"z_start_mm", g.z_start_mm},
          {"z_step_mm", g.z_step_mm},   {"z_count", g.z_count},   {"yaws_deg", g.yaws_deg}};
}

PoseGridSpec grid_from_json(const nlohmann::json& j) {
  PoseGridSpec g;
  g.xy_step_mm = j.at("xy_step_mm").get<double>();
  g.xy_count = j.at("xy_count").get<int>();
  g.z_start_mm = j.at("z_start_mm").get<double>();
  g.z_step_mm = j.at("z_step_mm").get<double>();
  g.z_count = j.at("z_count").get<int>();
  g.yaws_deg = j.at("yaws_deg").get<std::vector<double>>();
  return g;
}

PairedSample render_pair(const IndenterShape& shape, const ContactPose& pose,
                         const SensorSpec& sensor,
                         const std::shared_ptr<const TactileImage>& background) {
  PairedSample s;
  s.depth = render_depth(shape, pose, sensor);
  s.target = quantize_8bit(oracle_render(s.depth, sensor));
  s.background = background;
  s.pose = pose;
  s.object_id = shape.describe();
  return s;
}

std::vector<PairedSample> pretrain_samples(const SensorSpec& sensor, const CorpusConfig& cfg,
                                           std::uint64_t seed,
                                           const std::shared_ptr<const TactileImage>& bg) {
  std::vector<IndenterShape> shapes;
  for (double r : cfg.sphere_radii_mm) shapes.push_back(IndenterShape::sphere(r));
  for (double w : cfg.edge_widths_mm) shapes.push_back(IndenterShape::edge(w, 0.0));
  std::vector<PairedSample> out;
  out.reserve(shapes.size() * cfg.pretrain_poses_per_shape);
  for (std::size_t si = 0; si < shapes.size(); ++si) {
    Rng rng(derive_seed(seed, {kPretrainStream, si}));
    for (int k = 0; k < cfg.pretrain_poses_per_shape; ++k) {
      ContactPose pose;
      pose.dx_mm = rng.uniform(-cfg.pretrain_xy_range_mm, cfg.pretrain_xy_range_mm);
      pose.dy_mm = rng.uniform(-cfg.pretrain_xy_range_mm, cfg.pretrain_xy_range_mm);
      pose.dz_mm = rng.uniform(cfg.pretrain_dz_min_mm, cfg.pretrain_dz_max_mm);
      pose.yaw_deg = rng.uniform(-180.0, 180.0);
      out.push_back(render_pair(shapes[si], pose, sensor, bg));
    }
  }
  return out;
}

std::vector<PairedSample> braille_samples(CorpusKind kind, const SensorSpec& sensor,
                                          const CorpusConfig& cfg, std::uint64_t seed,
                                          const std::shared_ptr<const TactileImage>& bg) {
  const auto classifier_poses = pose_grid(cfg.classifier_grid);
  std::vector<ContactPose> candidates;
  std::uint64_t stream = kClassifierStream;
  std::size_t first = 0, count = 0;
  if (kind == CorpusKind::kFinetune) {
    // Keep fine-tuning poses disjoint from every pose the classifier sees.
    for (const auto& p : pose_grid(cfg.finetune_grid)) {
      if (!cfg.exclude_classifier_poses ||
          std::find(classifier_poses.begin(), classifier_poses.end(), p) == classifier_poses.end()) {
        candidates.push_back(p);
      }
    }
    stream = kFinetuneStream;
    count = cfg.finetune_per_char > 0 ? static_cast<std::size_t>(cfg.finetune_per_char)
                                      : candidates.size();
  } else {
    candidates = classifier_poses;
    if (kind == CorpusKind::kClassifierTrain) {
      count = cfg.classifier_train_per_char;
    } else {
      first = cfg.classifier_train_per_char;
      count = cfg.classifier_test_per_char;
    }
  }
  if (first + count > candidates.size()) {
    throw ConfigError("requested " + std::to_string(first + count) + " poses per character but the " +
                      to_string(kind) + " grid has " + std::to_string(candidates.size()));
  }
  std::vector<PairedSample> out;
  const std::string& alphabet = braille_alphabet();
  for (std::size_t ci = 0; ci < alphabet.size(); ++ci) {
    const auto shape = IndenterShape::braille_cell(alphabet[ci], cfg.braille);
    // Train and test classifier corpora share this permutation and take
    // consecutive, non-overlapping slices of it.
    const auto perm = seeded_permutation(candidates.size(), derive_seed(seed, {stream, ci}));
    for (std::size_t k = first; k < first + count; ++k) {
      PairedSample s = render_pair(shape, candidates[perm[k]], sensor, bg);
      s.label = alphabet[ci];
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

std::string to_string(CorpusKind kind) {
  switch (kind) {
    case CorpusKind::kPretrain:
      return "pretrain";
    case CorpusKind::kFinetune:
      return "finetune";
    case CorpusKind::kClassifierTrain:
      return "classifier_train";
    case CorpusKind::kClassifierTest:
      return "classifier_test";
  }
  return "unknown";
}

CorpusKind corpus_kind_from_string(std::string_view name) {
  for (auto k : {CorpusKind::kPretrain, CorpusKind::kFinetune, CorpusKind::kClassifierTrain,
                 CorpusKind::kClassifierTest}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown corpus kind '" + std::string(name) + "'");
}

LatentImage extract_foreground(const TactileImage& img, const TactileImage& background) {
  require_same_shape(img, background, "extract_foreground");
  LatentImage fg(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) fg[i] = img[i] - background[i];
  return fg;
}

TactileImage composite_background(const LatentImage& foreground, const TactileImage& background) {
  require_same_shape(foreground, background, "composite_background");
  TactileImage out(background.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(background[i] + foreground[i], 0.0, 1.0);
  }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("cannot split an empty sample set");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("train_fraction must lie in (0, 1)");
  }
  const auto perm = seeded_permutation(n, seed);
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + cut);
  out.test.assign(perm.begin() + cut, perm.end());
  return out;
}

TactileImage augment_lighting(const TactileImage& img, std::uint64_t seed) {
  Rng rng(seed);
  const double brightness = rng.uniform(0.8, 1.2);
  double gain[3];
  for (double& g : gain) g = rng.uniform(0.9, 1.1);
  const double offset = rng.uniform(-0.05, 0.05);
  TactileImage out(img.shape());
  const std::size_t plane = static_cast<std::size_t>(img.height()) * img.width();
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double g = gain[std::min<std::size_t>(i / plane, 2)];
    out[i] = std::clamp(brightness * g * img[i] + offset, 0.0, 1.0);
  }
  return out;
}

void CorpusConfig::validate() const {
  if (sphere_radii_mm.empty() && edge_widths_mm.empty()) {
    throw ConfigError("pretrain corpus needs at least one primitive");
  }
  if (pretrain_poses_per_shape < 1) throw ConfigError("pretrain_poses_per_shape must be >= 1");
  if (!(pretrain_dz_min_mm <= pretrain_dz_max_mm && pretrain_dz_max_mm <= 0.0)) {
    throw ConfigError("pretrain dz range must satisfy min <= max <= 0");
  }
  if (finetune_per_char < 0 || classifier_train_per_char < 1 || classifier_test_per_char < 1) {
    throw ConfigError("per-character counts must be positive");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
}

nlohmann::json to_json(const CorpusConfig& c) {
  return {{"sphere_radii_mm", c.sphere_radii_mm},
          {"edge_widths_mm", c.edge_widths_mm},
          {"pretrain_poses_per_shape", c.pretrain_poses_per_shape},
          {"pretrain_xy_range_mm", c.pretrain_xy_range_mm},
          {"pretrain_dz_min_mm", c.pretrain_dz_min_mm},
          {"pretrain_dz_max_mm", c.pretrain_dz_max_mm},
          {"pretrain_background_variant", c.pretrain_background_variant},
          {"braille",
           {{"dot_radius_mm", c.braille.dot_radius_mm},
            {"dot_spacing_mm", c.braille.dot_spacing_mm},
            {"dot_height_mm", c.braille.dot_height_mm},
            {"plate_size_mm", c.braille.plate_size_mm}}},
          {"finetune_grid", grid_to_json(c.finetune_grid)},
          {"finetune_per_char", c.finetune_per_char},
          {"exclude_classifier_poses", c.exclude_classifier_poses},
          {"classifier_grid", grid_to_json(c.classifier_grid)},
          {"classifier_train_per_char", c.classifier_train_per_char},
          {"classifier_test_per_char", c.classifier_test_per_char},
          {"train_fraction", c.train_fraction}};
}

CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
  CorpusConfig c;
  c.sphere_radii_mm = j.value("sphere_radii_mm", c.sphere_radii_mm);
  c.edge_widths_mm = j.value("edge_widths_mm", c.edge_widths_mm);
  c.pretrain_poses_per_shape = j.value("pretrain_poses_per_shape", c.pretrain_poses_per_shape);
  c.pretrain_xy_range_mm = j.value("pretrain_xy_range_mm", c.pretrain_xy_range_mm);
  c.pretrain_dz_min_mm = j.value("pretrain_dz_min_mm", c.pretrain_dz_min_mm);
  c.pretrain_dz_max_mm = j.value("pretrain_dz_max_mm", c.pretrain_dz_max_mm);
  c.pretrain_background_variant =
      j.value("pretrain_background_variant", c.pretrain_background_variant);
  if (j.contains("braille")) {
    const auto& b = j.at("braille");
    c.braille.dot_radius_mm = b.value("dot_radius_mm", c.braille.dot_radius_mm);
    c.braille.dot_spacing_mm = b.value("dot_spacing_mm", c.braille.dot_spacing_mm);
    c.braille.dot_height_mm = b.value("dot_height_mm", c.braille.dot_height_mm);
    c.braille.plate_size_mm = b.value("plate_size_mm", c.braille.plate_size_mm);
  }
  if (j.contains("finetune_grid")) c.finetune_grid = grid_from_json(j.at("finetune_grid"));
  c.finetune_per_char = j.value("finetune_per_char", c.finetune_per_char);
  c.exclude_classifier_poses = j.value("exclude_classifier_poses", c.exclude_classifier_poses);
  if (j.contains("classifier_grid")) c.classifier_grid = grid_from_json(j.at("classifier_grid"));
  c.classifier_train_per_char = j.value("classifier_train_per_char", c.classifier_train_per_char);
  c.classifier_test_per_char = j.value("classifier_test_per_char", c.classifier_test_per_char);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.validate();
  return c;
}

SensorSpec corpus_sensor(CorpusKind kind, const SensorSpec& sensor, const CorpusConfig& config) {
  SensorSpec s = sensor;
  if (kind == CorpusKind::kPretrain && config.pretrain_background_variant != 0) {
    s.background = make_background(s.height, s.width, config.pretrain_background_variant);
  }
  // Stored backgrounds are 8-bit, so render against the quantized one.
  s.background = quantize_8bit(s.background);
  return s;
}

std::vector<PairedSample> generate_samples(CorpusKind kind, const SensorSpec& sensor,
                                           const CorpusConfig& config, std::uint64_t seed) {
  config.validate();
  const SensorSpec s = corpus_sensor(kind, sensor, config);
  s.validate();
  auto bg = std::make_shared<const TactileImage>(s.background);
  std::vector<PairedSample> out = kind == CorpusKind::kPretrain
                                      ? pretrain_samples(s, config, seed, bg)
                                      : braille_samples(kind, s, config, seed, bg);
  switch (kind) {
    case CorpusKind::kClassifierTrain:
      for (auto& p : out) p.split = "train";
      break;
    case CorpusKind::kClassifierTest:
      for (auto& p : out) p.split = "test";
      break;
    default: {
      const auto idx = split_indices(out.size(), config.train_fraction,
                                     derive_seed(seed, {kSplitStream}));
      for (std::size_t i : idx.train) out[i].split = "train";
      for (std::size_t i : idx.test) out[i].split = "test";
    }
  }
  return out;
}

// ---------------------------------------------------------------- manifest

std::size_t CorpusManifest::count(std::string_view split) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [&](const SampleRecord& r) { return r.split == split; }));
}

namespace {

nlohmann::json manifest_body(const CorpusManifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& r : m.samples) {
    samples.push_back({{"depth", r.depth_path},
                       {"target", r.target_path},
                       {"depth_sha256", r.depth_sha256},
                       {"target_sha256", r.target_sha256},
                       {"label", r.label ? nlohmann::json(std::string(1, *r.label)) : nullptr},
                       {"pose", to_json(r.pose)},
                       {"object_id", r.object_id},
                       {"split", r.split}});
  }
  return {{"format", "tacdiff-corpus"},
          {"version", 1},
          {"kind", to_string(m.kind)},
          {"seed", m.seed},
          {"sensor", m.sensor},
          {"sensor_hash", m.sensor_hash},
          {"generation", m.generation},
          {"depth_full_scale_mm", m.depth_full_scale_mm},
          {"background", m.background_path},
          {"background_sha256", m.background_sha256},
          {"samples", samples}};
}

}  // namespace

std::string CorpusManifest::compute_hash() const { return sha256_hex(manifest_body(*this).dump()); }

nlohmann::json to_json(const CorpusManifest& m) {
  nlohmann::json j = manifest_body(m);
  j["content_hash"] = m.content_hash;
  return j;
}

CorpusManifest build_corpus(CorpusKind kind, const SensorSpec& sensor, const CorpusConfig& config,
                            std::uint64_t seed, const fs::path& dir) {
  const auto samples = generate_samples(kind, sensor, config, seed);
  const SensorSpec s = corpus_sensor(kind, sensor, config);

  std::error_code ec;
  for (const char* sub : {"depth", "target"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw PersistenceError("cannot create directory", (dir / sub).string());
  }

  CorpusManifest m;
  m.kind = kind;
  m.seed = seed;
  m.sensor = to_json(s);
  m.sensor_hash = s.hash();
  m.generation = to_json(config);
  m.depth_full_scale_mm = s.max_penetration_mm;
  m.background_path = "background.png";
  m.root = dir;
  write_rgb_png((dir / m.background_path).string(), s.background);
  m.background_sha256 = sha256_file((dir / m.background_path).string());

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& p = samples[i];
    SampleRecord r;
    r.depth_path = "depth/" + sample_name(i);
    r.target_path = "target/" + sample_name(i);
    write_depth_png((dir / r.depth_path).string(), p.depth, m.depth_full_scale_mm);
    write_rgb_png((dir / r.target_path).string(), p.target);
    r.depth_sha256 = sha256_file((dir / r.depth_path).string());
    r.target_sha256 = sha256_file((dir / r.target_path).string());
    r.label = p.label;
    r.pose = p.pose;
    r.object_id = p.object_id;
    r.split = p.split;
    m.samples.push_back(std::move(r));
  }
  m.content_hash = m.compute_hash();

  const fs::path path = dir / kManifestName;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << to_json(m).dump(1) << '\n';
  if (!out) throw PersistenceError("cannot write manifest", path.string());
  return m;
}

CorpusManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestName;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError("cannot open manifest", path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw PersistenceError(std::string("malformed manifest (") + e.what() + ")", path.string());
  }
  CorpusManifest m;
  try {
    if (j.at("format") != "tacdiff-corpus" || j.at("version") != 1) {
      throw PersistenceError("unsupported manifest format", path.string());
    }
    m.kind = corpus_kind_from_string(j.at("kind").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.sensor = j.at("sensor");
    m.sensor_hash = j.at("sensor_hash").get<std::string>();
    m.generation = j.at("generation");
    m.depth_full_scale_mm = j.at("depth_full_scale_mm").get<double>();
    m.background_path = j.at("background").get<std::string>();
    m.background_sha256 = j.at("background_sha256").get<std::string>();
    for (const auto& s : j.at("samples")) {
      SampleRecord r;
      r.depth_path = s.at("depth").get<std::string>();
      r.target_path = s.at("target").get<std::string>();
      r.depth_sha256 = s.at("depth_sha256").get<std::string>();
      r.target_sha256 = s.at("target_sha256").get<std::string>();
      if (!s.at("label").is_null()) r.label = s.at("label").get<std::string>().at(0);
      r.pose = contact_pose_from_json(s.at("pose"));
      r.object_id = s.at("object_id").get<std::string>();
      r.split = s.at("split").get<std::string>();
      m.samples.push_back(std::move(r));
    }
    m.content_hash = j.at("content_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw PersistenceError(std::string("malformed manifest (") + e.what() + ")", path.string());
  }
  if (m.compute_hash() != m.content_hash) {
    throw PersistenceError("manifest content hash mismatch", path.string());
  }
  m.root = dir;
  return m;
}

std::vector<PairedSample> load_corpus(const CorpusManifest& m, std::optional<std::string> split,
                                      bool verify) {
  auto check = [&](const std::string& rel, const std::string& digest) {
    const std::string path = (m.root / rel).string();
    if (verify && sha256_file(path) != digest) {
      throw PersistenceError("file digest does not match manifest", path);
    }
    return path;
  };
  auto bg = std::make_shared<const TactileImage>(
      read_rgb_png(check(m.background_path, m.background_sha256)));
  std::vector<PairedSample> out;
  for (const auto& r : m.samples) {
    if (split && r.split != *split) continue;
    PairedSample p;
    p.depth = read_depth_png(check(r.depth_path, r.depth_sha256), m.depth_full_scale_mm);
    p.target = read_rgb_png(check(r.target_path, r.target_sha256));
    if (p.target.shape() != bg->shape() || p.depth.height() != bg->height() ||
        p.depth.width() != bg->width()) {
      throw PersistenceError("sample size does not match background", (m.root / r.target_path).string());
    }
    p.background = bg;
    p.label = r.label;
    p.pose = r.pose;
    p.object_id = r.object_id;
    p.split = r.split;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace tacdiff
