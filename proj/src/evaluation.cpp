// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tacdiff/checkpoint.hpp"
#include "tacdiff/errors.hpp"
#include "tacdiff/png_io.hpp"
#include "tacdiff/rng.hpp"
#include "tacdiff/training.hpp"

namespace tacdiff {

namespace fs = std::filesystem;

namespace {

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;

std::array<double, 2 * kSsimRadius + 1> gaussian_window() {
  std::array<double, 2 * kSsimRadius + 1> w{};
  double sum = 0.0;
  for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
    w[i + kSsimRadius] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
    sum += w[i + kSsimRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable Gaussian filter restricted to positions where the window fits.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w) {
  static const auto k = gaussian_window();
  const int k2 = 2 * kSsimRadius;
  const int ow = w - k2, oh = h - k2;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i <= k2; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i <= k2; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

// 3x5 bitmap glyphs for the panel captions, one row per 3-bit mask.
const std::array<std::uint8_t, 5>* glyph(char c) {
  static const std::array<std::uint8_t, 5> digits[10] = {
      {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
      {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7}};
  static const std::array<std::uint8_t, 5> dot = {0, 0, 0, 0, 2};
  static const std::array<std::uint8_t, 5> minus = {0, 0, 7, 0, 0};
  if (c >= '0' && c <= '9') return &digits[c - '0'];
  if (c == '.') return &dot;
  if (c == '-') return &minus;
  return nullptr;
}

void draw_text(TactileImage& img, int x0, int y0, const std::string& text) {
  int x = x0;
  for (char c : text) {
    if (const auto* g = glyph(c)) {
      for (int r = 0; r < 5; ++r) {
        for (int b = 0; b < 3; ++b) {
          if (((*g)[r] >> (2 - b)) & 1) {
            const int px = x + b, py = y0 + r;
            if (px < img.width() && py < img.height()) {
              for (int ch = 0; ch < 3; ++ch) img.at(ch, py, px) = 1.0;
            }
          }
        }
      }
    }
    x += 4;
  }
}

}  // namespace

double ssim(const Image& a, const Image& b, double data_range) {
  require_same_shape(a, b, "ssim");
  const int h = a.height(), w = a.width();
  if (h < 2 * kSsimRadius + 1 || w < 2 * kSsimRadius + 1) {
    throw ArgumentError("ssim needs images of at least 11x11 pixels");
  }
  if (!(data_range > 0.0)) throw ArgumentError("ssim data_range must be positive");
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      x[i] = a[c * plane + i];
      y[i] = b[c * plane + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w), my = filter_valid(y, h, w);
    const auto mxx = filter_valid(xx, h, w), myy = filter_valid(yy, h, w);
    const auto mxy = filter_valid(xy, h, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = mxx[i] - mx[i] * mx[i];
      const double vy = myy[i] - my[i] * my[i];
      const double cov = mxy[i] - mx[i] * my[i];
      const double num = (2.0 * (mx[i] * my[i]) + c1) * (2.0 * cov + c2);
      const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
      sum += num / den;
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / a.channels();
}

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw ArgumentError("mse of empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) * 255.0;
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

SimilarityReport similarity_report(std::span<const TactileImage> generated,
                                   std::span<const TactileImage> targets,
                                   std::span<const std::string> ids) {
  if (generated.size() != targets.size() || generated.empty()) {
    throw ArgumentError("similarity_report needs equally many, non-empty generated and target images");
  }
  SimilarityReport r;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    r.ids.push_back(i < ids.size() ? ids[i] : std::to_string(i));
    r.ssim.push_back(ssim(generated[i], targets[i]));
    r.mse.push_back(mse(generated[i], targets[i]));
    r.mean_ssim += r.ssim.back();
    r.mean_mse += r.mse.back();
  }
  r.mean_ssim /= static_cast<double>(generated.size());
  r.mean_mse /= static_cast<double>(generated.size());
  return r;
}

nlohmann::json to_json(const SimilarityReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    pairs.push_back({{"id", r.ids[i]}, {"ssim", r.ssim[i]}, {"mse", r.mse[i]}});
  }
  return {{"mean_ssim", r.mean_ssim},
          {"mean_mse", r.mean_mse},
          {"mse_units", "0-255 intensity"},
          {"ssim_parameters",
           {{"window", "gaussian 11x11"}, {"sigma", kSsimSigma}, {"k1", 0.01}, {"k2", 0.03},
            {"data_range", 1.0}}},
          {"pairs", pairs}};
}

ClassifierMetrics classifier_metrics(std::span<const int> predictions, std::span<const int> labels,
                                     int num_classes) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw ArgumentError("classifier_metrics needs equally many, non-empty predictions and labels");
  }
  std::vector<int> tp(num_classes, 0), predicted(num_classes, 0), actual(num_classes, 0);
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes) {
      throw ArgumentError("class index out of range");
    }
    ++predicted[p];
    ++actual[y];
    if (p == y) {
      ++tp[y];
      ++correct;
    }
  }
  ClassifierMetrics m;
  m.accuracy_pct = 100.0 * correct / static_cast<double>(labels.size());
  for (int k = 0; k < num_classes; ++k) {
    if (predicted[k] > 0) m.precision += static_cast<double>(tp[k]) / predicted[k];
    if (actual[k] > 0) m.recall += static_cast<double>(tp[k]) / actual[k];
  }
  m.precision /= num_classes;
  m.recall /= num_classes;
  return m;
}

const ComparisonRow* ComparisonReport::find(std::string_view source,
                                            std::string_view real_pct) const {
  for (const auto& r : rows) {
    if (r.source == source && r.real_finetune_pct == real_pct) return &r;
  }
  return nullptr;
}

nlohmann::json to_json(const ComparisonReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"source", r.source},
                    {"real_finetune_pct", r.real_finetune_pct},
                    {"accuracy_pct", r.metrics.accuracy_pct},
                    {"precision", r.metrics.precision},
                    {"recall", r.metrics.recall},
                    {"reference_accuracy_pct", r.reference_accuracy_pct
                                                   ? nlohmann::json(*r.reference_accuracy_pct)
                                                   : nlohmann::json(nullptr)},
                    {"train_images", r.train_images},
                    {"warnings", r.warnings}});
  }
  return {{"averaging", report.averaging},
          {"test_images", report.test_images},
          {"config", report.config},
          {"rows", rows}};
}

std::string format_report(const ComparisonReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line,
                "# braille classification, %zu oracle test images, %s-averaged precision/recall\n",
                report.test_images, report.averaging.c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-18s %6s %9s %9s %7s %7s %10s\n", "source", "real%",
                "accuracy", "precision", "recall", "train", "reference");
  out += line;
  for (const auto& r : report.rows) {
    std::string ref = "-";
    if (r.reference_accuracy_pct) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", *r.reference_accuracy_pct);
      ref = buf;
    }
    std::snprintf(line, sizeof line, "%-18s %6s %9.2f %9.3f %7.3f %7zu %10s\n", r.source.c_str(),
                  r.real_finetune_pct.c_str(), r.metrics.accuracy_pct, r.metrics.precision,
                  r.metrics.recall, r.train_images, ref.c_str());
    out += line;
    for (const auto& w : r.warnings) out += "#   warning (" + r.source + "): " + w + "\n";
  }
  out += "# reference = published accuracy on real sensor data, for context only\n";
  return out;
}

nlohmann::json to_json(const HarnessConfig& c) {
  return {{"classifier", to_json(c.classifier)},
          {"real_finetune_fraction", c.real_finetune_fraction},
          {"seed", c.seed},
          {"sample_batch_size", c.sample_batch_size}};
}

HarnessConfig harness_config_from_json(const nlohmann::json& j) {
  HarnessConfig c;
  if (j.contains("classifier")) c.classifier = classifier_config_from_json(j.at("classifier"));
  c.real_finetune_fraction = j.value("real_finetune_fraction", c.real_finetune_fraction);
  c.seed = j.value("seed", c.seed);
  c.sample_batch_size = j.value("sample_batch_size", c.sample_batch_size);
  if (!(c.real_finetune_fraction > 0.0 && c.real_finetune_fraction <= 1.0)) {
    throw ConfigError("real_finetune_fraction must lie in (0, 1]");
  }
  return c;
}

Image sim_image(const DepthMap& depth, double full_scale_mm) {
  const Image n = depth.normalized(full_scale_mm);
  Image out(3, depth.height(), depth.width());
  const std::size_t plane = n.size();
  for (int c = 0; c < 3; ++c) {
    std::copy(n.values().begin(), n.values().end(), out.values().begin() + c * plane);
  }
  return out;
}

LabeledImages labeled(std::span<const PairedSample> samples, std::span<const Image> images) {
  if (samples.size() != images.size()) throw ArgumentError("labeled: size mismatch");
  LabeledImages out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].label) throw ArgumentError("classifier sample without a label");
    out.images.push_back(images[i]);
    out.labels.push_back(braille_class_index(*samples[i].label));
  }
  return out;
}

ComparisonReport run_comparison(const HarnessConfig& config,
                                std::span<const PairedSample> train,
                                std::span<const PairedSample> test,
                                const DenoiserParams& diffusion, const NoiseSchedule& schedule,
                                std::vector<TactileImage>* generated) {
  if (train.empty() || test.empty()) throw ConfigError("classifier corpora must not be empty");
  ClassifierConfig cc = config.classifier;
  cc.seed = config.seed;
  cc.height = test.front().target.height();
  cc.width = test.front().target.width();
  cc.channels = 3;
  cc.num_classes = static_cast<int>(braille_alphabet().size());
  const double full_scale = diffusion.config().depth_scale_mm;
  const auto test_bg = test.front().background;
  if (!test_bg) throw ConfigError("classifier test corpus has no background");

  std::vector<Image> sim, real;
  std::vector<DepthMap> depth;
  for (const auto& s : train) {
    sim.push_back(sim_image(s.depth, full_scale));
    real.push_back(s.target);
    depth.push_back(s.depth);
  }
  std::vector<Image> test_images;
  std::vector<int> test_labels;
  for (const auto& s : test) {
    test_images.push_back(s.target);
    test_labels.push_back(braille_class_index(s.label.value()));
  }

  // Diffusion data adaptation: generated foreground over the test-time background.
  const auto fg = sample_foregrounds(diffusion, schedule, depth,
                                     derive_seed(config.seed, {0xd1ff}), config.sample_batch_size);
  std::vector<Image> diff_images;
  for (const auto& f : fg) diff_images.push_back(composite_background(f, *test_bg));
  if (generated) generated->assign(diff_images.begin(), diff_images.end());

  ComparisonReport report;
  report.test_images = test.size();
  report.config = to_json(config);

  auto evaluate = [&](ComparisonRow row, const BrailleClassifier& model) {
    const auto pred = model.predict(test_images);
    row.metrics = classifier_metrics(pred, test_labels, cc.num_classes);
    report.rows.push_back(std::move(row));
  };
  auto train_row = [&](const std::string& source, const std::vector<Image>& images,
                       std::optional<double> reference, const ImageTransform& augment) {
    ClassifierTrainLog log;
    const auto model = train_classifier(labeled(train, images), cc, augment, nullptr, &log);
    ComparisonRow row;
    row.source = source;
    row.reference_accuracy_pct = reference;
    row.train_images = images.size();
    row.warnings = log.warnings;
    evaluate(std::move(row), model);
  };

  train_row("sim", sim, 30.23, nullptr);
  train_row("sim+aug", sim, 43.48,
            [](const Image& img, std::uint64_t seed) { return augment_lighting(img, seed); });

  {
    // Same total budget: half on simulation, half on a fraction of oracle images.
    ClassifierConfig first = cc, second = cc;
    first.steps = cc.steps / 2;
    second.steps = cc.steps - first.steps;
    ClassifierTrainLog log;
    const auto base = train_classifier(labeled(train, sim), first, nullptr, nullptr, &log);
    const auto pick = select_fraction(train.size(), config.real_finetune_fraction, config.seed);
    std::vector<PairedSample> sub;
    std::vector<Image> sub_images;
    for (std::size_t i : pick) {
      sub.push_back(train[i]);
      sub_images.push_back(real[i]);
    }
    const auto model = train_classifier(labeled(sub, sub_images), second, nullptr, &base, &log);
    ComparisonRow row;
    row.source = "sim+finetune";
    char pct[16];
    std::snprintf(pct, sizeof pct, "%.0f", 100.0 * config.real_finetune_fraction);
    row.real_finetune_pct = pct;
    if (row.real_finetune_pct == "20") row.reference_accuracy_pct = 64.99;
    row.train_images = sim.size() + sub.size();
    row.warnings = log.warnings;
    evaluate(std::move(row), model);
  }

  train_row("diffusion", diff_images, 75.74, nullptr);
  train_row("real", real, 100.0, nullptr);
  return report;
}

ComparisonReport run_comparison(const HarnessConfig& config, const fs::path& train_dir,
                                const fs::path& test_dir, const fs::path& checkpoint) {
  for (const auto& p : {train_dir / kManifestName, test_dir / kManifestName, checkpoint}) {
    if (!fs::exists(p)) throw ConfigError("missing comparison input: " + p.string());
  }
  const auto train_m = read_manifest(train_dir);
  const auto test_m = read_manifest(test_dir);
  if (train_m.kind != CorpusKind::kClassifierTrain || test_m.kind != CorpusKind::kClassifierTest) {
    throw ConfigError("comparison needs classifier_train and classifier_test corpora");
  }
  const Checkpoint ck = load_checkpoint(checkpoint.string());
  const DenoiserParams model = restore_denoiser(ck);
  const auto train = load_corpus(train_m);
  const auto test = load_corpus(test_m);
  return run_comparison(config, train, test, model, ck.schedule.build());
}

std::vector<PanelRecord> emit_panels(std::span<const DepthMap> depth,
                                     std::span<const TactileImage> targets,
                                     std::span<const TactileImage> generated,
                                     double depth_full_scale_mm, const fs::path& out_dir) {
  if (depth.size() != targets.size() || targets.size() != generated.size()) {
    throw ArgumentError("emit_panels needs aligned depth, target and generated sequences");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw PersistenceError("cannot create directory", out_dir.string());
  constexpr int kCaption = 9;
  std::vector<PanelRecord> records;
  nlohmann::json listing = nlohmann::json::array();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    const auto& g = generated[i];
    require_same_shape(t, g, "emit_panels");
    const int h = t.height(), w = t.width();
    if (depth[i].height() != h || depth[i].width() != w) {
      throw ArgumentError("emit_panels: depth map does not match image size");
    }
    const Image sim = sim_image(depth[i], depth_full_scale_mm);
    TactileImage panel(3, h + kCaption, 4 * w);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          panel.at(c, y, x) = sim.at(c, y, x);
          panel.at(c, y, w + x) = t.at(c, y, x);
          panel.at(c, y, 2 * w + x) = g.at(c, y, x);
          panel.at(c, y, 3 * w + x) = std::abs(g.at(c, y, x) - t.at(c, y, x));
        }
      }
    }
    PanelRecord rec;
    rec.ssim = ssim(g, t);
    char text[32];
    std::snprintf(text, sizeof text, "%.3f", rec.ssim);
    draw_text(panel, 2 * w + 2, h + 2, text);
    char name[32];
    std::snprintf(name, sizeof name, "panel_%04zu.png", i);
    rec.path = (out_dir / name).string();
    write_rgb_png(rec.path, panel);
    listing.push_back({{"file", name}, {"ssim", rec.ssim}});
    records.push_back(std::move(rec));
  }
  const fs::path index = out_dir / "panels.json";
  std::ofstream out(index);
  out << listing.dump(1) << '\n';
  if (!out) throw PersistenceError("cannot write panel index", index.string());
  return records;
}

}  // namespace tacdiff
