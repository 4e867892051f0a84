// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "tacdiff/dataset.hpp"
#include "tacdiff/errors.hpp"
#include "tacdiff/nn/adam.hpp"
#include "tacdiff/rng.hpp"

namespace tacdiff {

using nn::Tensor;

namespace {

constexpr std::uint64_t kClassifierInit = 0xc1f0;
constexpr std::uint64_t kBatchStream = 0xba7c;
constexpr std::uint64_t kAugmentStream = 0xa06e;

Tensor<float> pack(std::span<const Image> images, std::span<const std::size_t> idx,
                   const std::vector<Image>* replaced = nullptr) {
  const Image& first = images[idx.front()];
  Tensor<float> x(static_cast<int>(idx.size()), first.channels(), first.height(), first.width());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Image& img = replaced ? (*replaced)[i] : images[idx[i]];
    if (img.shape() != first.shape()) throw ArgumentError("classifier batch mixes image shapes");
    float* dst = x.sample(static_cast<int>(i));
    for (std::size_t j = 0; j < img.size(); ++j) dst[j] = static_cast<float>(img[j] - 0.5);
  }
  return x;
}

}  // namespace

void ClassifierConfig::validate() const {
  if (height <= 0 || width <= 0 || channels <= 0) throw ConfigError("classifier input must be positive");
  const int factor = 1 << stage_channels.size();
  if (stage_channels.empty() || height % factor || width % factor) {
    throw ConfigError("classifier input must be divisible by 2^stages");
  }
  if (num_classes < 2) throw ConfigError("classifier needs at least two classes");
  if (steps < 1 || batch_size < 1 || !(learning_rate > 0.0)) {
    throw ConfigError("classifier steps, batch_size and learning_rate must be positive");
  }
}

nlohmann::json to_json(const ClassifierConfig& c) {
  return {{"height", c.height},       {"width", c.width},
          {"channels", c.channels},   {"num_classes", c.num_classes},
          {"stage_channels", c.stage_channels}, {"steps", c.steps},
          {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"seed", c.seed}};
}

ClassifierConfig classifier_config_from_json(const nlohmann::json& j) {
  ClassifierConfig c;
  c.height = j.value("height", c.height);
  c.width = j.value("width", c.width);
  c.channels = j.value("channels", c.channels);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.stage_channels = j.value("stage_channels", c.stage_channels);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

BrailleClassifier::BrailleClassifier(const ClassifierConfig& config) : config_(config) {
  config_.validate();
  int cin = config_.channels;
  for (std::size_t s = 0; s < config_.stage_channels.size(); ++s) {
    convs_.emplace_back(store_, "conv" + std::to_string(s), cin, config_.stage_channels[s], 3);
    cin = config_.stage_channels[s];
  }
  const int factor = 1 << config_.stage_channels.size();
  head_ = nn::Linear<float>(store_, "head", cin * (config_.height / factor) * (config_.width / factor),
                            config_.num_classes);
}

void BrailleClassifier::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {kClassifierInit}));
  for (const auto& c : convs_) c.init(store_, rng);
  head_.init(store_, rng);
}

Tensor<float> BrailleClassifier::logits(const Tensor<float>& x, Cache* cache) const {
  Tensor<float> h = x;
  for (const auto& conv : convs_) {
    Tensor<float> pre = conv.forward(store_, h);
    Tensor<float> act = nn::relu(pre);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(std::move(pre));
      cache->act.push_back(act);
    }
    h = nn::avgpool2(act);
  }
  Tensor<float> flat = std::move(h).reshaped(x.n(), head_.in_features(), 1, 1);
  Tensor<float> out = head_.forward(store_, flat);
  if (cache) cache->flat = std::move(flat);
  return out;
}

void BrailleClassifier::backward(const Cache& c, const Tensor<float>& grad_logits) {
  Tensor<float> g = head_.backward(store_, c.flat, grad_logits);
  const Tensor<float>& last = c.act.back();
  g = std::move(g).reshaped(last.n(), last.c(), last.h() / 2, last.w() / 2);
  for (int s = static_cast<int>(convs_.size()) - 1; s >= 0; --s) {
    g = nn::relu_backward(c.pre[s], nn::avgpool2_backward(g));
    g = convs_[s].backward(store_, c.inputs[s], g, /*need_input_grad=*/s > 0);
  }
}

std::vector<int> BrailleClassifier::predict(std::span<const Image> images, int batch_size) const {
  std::vector<int> out;
  out.reserve(images.size());
  const std::size_t bs = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t b = 0; b < images.size(); b += bs) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(images.size(), b + bs); ++i) idx.push_back(i);
    const Tensor<float> z = logits(pack(images, idx));
    for (int i = 0; i < z.n(); ++i) {
      const float* row = z.sample(i);
      out.push_back(static_cast<int>(std::max_element(row, row + z.c()) - row));
    }
  }
  return out;
}

BrailleClassifier train_classifier(const LabeledImages& data, const ClassifierConfig& config,
                                   const ImageTransform& augment, const BrailleClassifier* init,
                                   ClassifierTrainLog* log) {
  config.validate();
  if (data.images.empty() || data.images.size() != data.labels.size()) {
    throw ArgumentError("classifier training needs matching, non-empty images and labels");
  }
  std::vector<int> per_class(config.num_classes, 0);
  for (int y : data.labels) {
    if (y < 0 || y >= config.num_classes) throw ArgumentError("label out of range");
    ++per_class[y];
  }
  ClassifierTrainLog local;
  ClassifierTrainLog& L = log ? *log : local;
  for (int k = 0; k < config.num_classes; ++k) {
    if (per_class[k] == 0) L.warnings.push_back("class " + std::to_string(k) + " has no training images");
  }

  BrailleClassifier model = init ? *init : BrailleClassifier(config);
  if (!init) model.initialize(config.seed);
  nn::Adam<float> adam({config.learning_rate, 0.9, 0.999, 1e-8, 0.0});

  const std::size_t n = data.images.size();
  const std::size_t bs = std::min<std::size_t>(config.batch_size, n);
  std::vector<std::size_t> perm;
  std::size_t cursor = n;
  std::uint64_t epoch = 0;
  for (int step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> idx;
    while (idx.size() < bs) {
      if (cursor == n) {
        perm = seeded_permutation(n, derive_seed(config.seed, {kBatchStream, epoch++}));
        cursor = 0;
      }
      idx.push_back(perm[cursor++]);
    }
    std::vector<Image> augmented;
    if (augment) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        augmented.push_back(augment(data.images[idx[i]],
                                    derive_seed(config.seed, {kAugmentStream,
                                                              static_cast<std::uint64_t>(step), i})));
      }
    }
    const Tensor<float> x = pack(data.images, idx, augment ? &augmented : nullptr);
    BrailleClassifier::Cache cache;
    const Tensor<float> z = model.logits(x, &cache);
    Tensor<float> dz(z.n(), z.c(), 1, 1);
    double loss = 0.0;
    for (int i = 0; i < z.n(); ++i) {
      const float* row = z.sample(i);
      const float mx = *std::max_element(row, row + z.c());
      double sum = 0.0;
      for (int k = 0; k < z.c(); ++k) sum += std::exp(static_cast<double>(row[k] - mx));
      const int y = data.labels[idx[i]];
      loss += std::log(sum) - (row[y] - mx);
      for (int k = 0; k < z.c(); ++k) {
        const double p = std::exp(static_cast<double>(row[k] - mx)) / sum;
        dz.at(i, k, 0, 0) = static_cast<float>((p - (k == y ? 1.0 : 0.0)) / z.n());
      }
    }
    loss /= z.n();
    if (!std::isfinite(loss)) throw TrainingHealthError("non-finite classifier loss");
    L.losses.push_back(loss);
    model.params().zero_grad();
    model.backward(cache, dz);
    adam.step(model.params());
  }
  return model;
}

}  // namespace tacdiff
