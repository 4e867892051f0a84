// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "tacdiff/classifier.hpp"
#include "tacdiff/errors.hpp"
#include "tacdiff/evaluation.hpp"
#include "tacdiff/png_io.hpp"
#include "tacdiff/rng.hpp"
#include "test_util.hpp"

namespace tacdiff {
namespace {

TEST(Metrics, SsimMatchesReferenceImplementation) {
  const auto oracle = testing::load_json("metrics_oracle.json");
  ASSERT_EQ(oracle.at("pairs").size(), 20u);
  for (const auto& p : oracle.at("pairs")) {
    const auto a = read_rgb_png(testing::data_path("metric_pairs/" + p.at("a").get<std::string>()));
    const auto b = read_rgb_png(testing::data_path("metric_pairs/" + p.at("b").get<std::string>()));
    EXPECT_NEAR(ssim(a, b), p.at("ssim").get<double>(), 1e-3) << p.at("a");
    EXPECT_NEAR(mse(a, b), p.at("mse").get<double>(), 1e-9 * std::max(1.0, p.at("mse").get<double>()))
        << p.at("a");
  }
}

TEST(Metrics, SsimProperties) {
  Rng rng(1);
  Image a(3, 16, 20), b(3, 16, 20);
  for (double& v : a.values()) v = rng.uniform(0, 1);
  for (double& v : b.values()) v = rng.uniform(0, 1);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_EQ(ssim(a, b), ssim(b, a));
  EXPECT_LT(ssim(a, b), 0.5);
  EXPECT_THROW(ssim(Image(3, 10, 20), Image(3, 10, 20)), ArgumentError);
  EXPECT_THROW(ssim(a, Image(3, 16, 21)), ArgumentError);
  EXPECT_THROW(ssim(a, b, 0.0), ArgumentError);
}

TEST(Metrics, MseIsInIntensityUnits) {
  Image a(3, 2, 2, 0.0), b(3, 2, 2, 1.0 / 255.0);
  EXPECT_NEAR(mse(a, b), 1.0, 1e-12);
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_THROW(mse(Image(), Image()), ArgumentError);
}

TEST(Metrics, SimilarityReportAverages) {
  std::vector<TactileImage> g{Image(3, 12, 12, 0.5), Image(3, 12, 12, 0.2)};
  std::vector<TactileImage> t{Image(3, 12, 12, 0.5), Image(3, 12, 12, 0.3)};
  const auto r = similarity_report(g, t);
  EXPECT_EQ(r.ids, (std::vector<std::string>{"0", "1"}));
  EXPECT_NEAR(r.mean_mse, 0.5 * std::pow(0.1 * 255.0, 2), 1e-9);
  EXPECT_NEAR(r.mean_ssim, 0.5 * (r.ssim[0] + r.ssim[1]), 1e-15);
  EXPECT_EQ(to_json(r).at("mean_ssim"), r.mean_ssim);
  EXPECT_THROW(similarity_report(g, std::span<const TactileImage>(t.data(), 1)), ArgumentError);
}

TEST(ClassifierMetrics, MacroAveragesOverAllClasses) {
  const std::vector<int> labels{0, 0, 1, 1, 2, 2};
  const auto perfect = classifier_metrics(labels, labels, 3);
  EXPECT_EQ(perfect.accuracy_pct, 100.0);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);

  const std::vector<int> pred{0, 1, 1, 1, 2, 0};
  const auto m = classifier_metrics(pred, labels, 3);
  EXPECT_NEAR(m.accuracy_pct, 400.0 / 6.0, 1e-12);
  // precision: class0 1/2, class1 2/3, class2 1/1; recall: 1/2, 2/2, 1/2
  EXPECT_NEAR(m.precision, (0.5 + 2.0 / 3.0 + 1.0) / 3.0, 1e-12);
  EXPECT_NEAR(m.recall, (0.5 + 1.0 + 0.5) / 3.0, 1e-12);

  // Everything predicted as one class out of 27 balanced classes.
  std::vector<int> all_labels, all_zero;
  for (int c = 0; c < 27; ++c) {
    all_labels.push_back(c);
    all_zero.push_back(0);
  }
  const auto z = classifier_metrics(all_zero, all_labels, 27);
  EXPECT_NEAR(z.accuracy_pct, 100.0 / 27.0, 1e-12);
  EXPECT_NEAR(z.precision, 1.0 / 729.0, 1e-15);
  EXPECT_NEAR(z.recall, 1.0 / 27.0, 1e-15);
  EXPECT_THROW(classifier_metrics(std::vector<int>{5}, std::vector<int>{0}, 3), ArgumentError);
}

ClassifierConfig small_classifier() {
  ClassifierConfig c;
  c.height = c.width = 16;
  c.num_classes = 3;
  c.stage_channels = {4, 8};
  c.steps = 150;
  c.batch_size = 6;
  c.learning_rate = 3e-3;
  c.seed = 2;
  return c;
}

LabeledImages squares(int per_class, std::uint64_t seed) {
  Rng rng(seed);
  LabeledImages data;
  for (int i = 0; i < per_class * 3; ++i) {
    const int label = i % 3;
    Image img(3, 16, 16);
    for (double& v : img.values()) v = rng.uniform(0.0, 0.2);
    const int x0 = 1 + 5 * label;
    for (int c = 0; c < 3; ++c) {
      for (int y = 5; y < 10; ++y) {
        for (int x = x0; x < x0 + 4; ++x) img.at(c, y, x) = 0.9;
      }
    }
    data.images.push_back(img);
    data.labels.push_back(label);
  }
  return data;
}

TEST(Classifier, ParameterCountMatchesTally) {
  const auto o = testing::load_json("params_oracle.json").at("classifier");
  EXPECT_EQ(BrailleClassifier(ClassifierConfig{}).params().size(),
            o.at("parameters").get<std::size_t>());
}

TEST(Classifier, LearnsSeparableClassesDeterministically) {
  const auto train = squares(6, 1);
  const auto test = squares(4, 2);
  ClassifierTrainLog log;
  const auto model = train_classifier(train, small_classifier(), nullptr, nullptr, &log);
  const auto again = train_classifier(train, small_classifier());
  EXPECT_EQ(model.params().checksum(), again.params().checksum());
  EXPECT_LT(log.losses.back(), log.losses.front());
  const auto pred = model.predict(test.images);
  EXPECT_EQ(classifier_metrics(pred, test.labels, 3).accuracy_pct, 100.0);
}

TEST(Classifier, WarnsAboutMissingClassesAndValidates) {
  auto data = squares(2, 1);
  LabeledImages two;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] != 2) {
      two.images.push_back(data.images[i]);
      two.labels.push_back(data.labels[i]);
    }
  }
  ClassifierConfig c = small_classifier();
  c.steps = 2;
  ClassifierTrainLog log;
  train_classifier(two, c, nullptr, nullptr, &log);
  EXPECT_FALSE(log.warnings.empty());
  data.labels[0] = 7;
  EXPECT_THROW(train_classifier(data, c), ArgumentError);
  c.height = 18;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(to_json(classifier_config_from_json(to_json(small_classifier()))),
            to_json(small_classifier()));
}

TEST(Comparison, ProducesAllFiveRows) {
  // Tiny end-to-end run: 16x16 braille corpora, an untrained denoiser, a few
  // classifier steps. Only the report structure is checked here.
  const SensorSpec sensor = default_sensor(16, 16);
  CorpusConfig cc;
  cc.braille.dot_radius_mm = 0.5;
  cc.braille.dot_spacing_mm = 1.5;
  cc.braille.dot_height_mm = 0.4;
  cc.braille.plate_size_mm = 6.0;
  cc.classifier_train_per_char = 2;
  cc.classifier_test_per_char = 1;
  const auto train = generate_samples(CorpusKind::kClassifierTrain, sensor, cc, 1);
  const auto test = generate_samples(CorpusKind::kClassifierTest, sensor, cc, 1);
  DenoiserConfig dc;
  dc.height = dc.width = 16;
  dc.base_channels = 4;
  dc.channel_multipliers = {1, 2};
  dc.blocks_per_stage = 1;
  dc.noise_embed_dim = 8;
  const auto model = init_denoiser(dc, 1);
  HarnessConfig hc;
  hc.classifier.height = hc.classifier.width = 16;
  hc.classifier.stage_channels = {4, 8};
  hc.classifier.steps = 4;
  hc.classifier.batch_size = 8;
  hc.seed = 3;
  std::vector<TactileImage> generated;
  const auto report =
      run_comparison(hc, train, test, model, make_linear_schedule(4, 1e-4, 0.02), &generated);
  EXPECT_EQ(generated.size(), train.size());
  ASSERT_EQ(report.rows.size(), 5u);
  EXPECT_EQ(report.test_images, test.size());
  for (const char* source : {"sim", "sim+aug", "diffusion", "real"}) {
    const auto* row = report.find(source);
    ASSERT_NE(row, nullptr) << source;
    EXPECT_GE(row->metrics.accuracy_pct, 0.0);
    EXPECT_LE(row->metrics.accuracy_pct, 100.0);
    EXPECT_TRUE(row->reference_accuracy_pct.has_value());
  }
  const auto* ft = report.find("sim+finetune", "20");
  ASSERT_NE(ft, nullptr);
  EXPECT_EQ(ft->reference_accuracy_pct.value(), 64.99);
  EXPECT_EQ(report.find("diffusion")->reference_accuracy_pct.value(), 75.74);
  const std::string text = format_report(report);
  EXPECT_NE(text.find("sim+aug"), std::string::npos);
  EXPECT_NE(text.find("macro"), std::string::npos);
  EXPECT_EQ(to_json(report).at("rows").size(), 5u);
}

TEST(Comparison, MissingInputsAreNamed) {
  testing::TempDir tmp;
  try {
    run_comparison(HarnessConfig{}, tmp.path() / "a", tmp.path() / "b", tmp.path() / "c.ckpt");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}

TEST(Panels, WritesOnePanelPerSample) {
  testing::TempDir tmp;
  const SensorSpec s = default_sensor(16, 16);
  std::vector<DepthMap> depth{render_depth(IndenterShape::sphere(3.0), {0, 0, -1, 0}, s)};
  std::vector<TactileImage> target{oracle_render(depth[0], s)};
  std::vector<TactileImage> gen{s.background};
  const auto panels = emit_panels(depth, target, gen, 2.5, tmp.path());
  ASSERT_EQ(panels.size(), 1u);
  EXPECT_NEAR(panels[0].ssim, ssim(gen[0], target[0]), 1e-12);
  const auto img = read_rgb_png(panels[0].path);
  EXPECT_EQ(img.width(), 4 * 16);
  EXPECT_GT(img.height(), 16);
  EXPECT_TRUE(std::filesystem::exists(tmp.path() / "panels.json"));
  EXPECT_THROW(emit_panels(depth, target, {}, 2.5, tmp.path()), ArgumentError);
}

}  // namespace
}  // namespace tacdiff
