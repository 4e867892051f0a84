// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacdiff/image.hpp"
#include "tacdiff/nn/layers.hpp"

namespace tacdiff {

struct ClassifierConfig {
  int height = 64;
  int width = 64;
  int channels = 3;
  int num_classes = 27;
  std::vector<int> stage_channels{16, 32, 64};
  int steps = 1500;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const ClassifierConfig& config);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

struct LabeledImages {
  std::vector<Image> images;  // channels x H x W in [0, 1]
  std::vector<int> labels;    // 0 .. num_classes - 1
};

// Three conv3x3 + ReLU + 2x2 average-pool stages, flattened into one linear
// layer over the classes.
class BrailleClassifier {
 public:
  struct Cache {
    std::vector<nn::Tensor<float>> inputs, pre, act;
    nn::Tensor<float> flat;
  };

  explicit BrailleClassifier(const ClassifierConfig& config);
  void initialize(std::uint64_t seed);

  const ClassifierConfig& config() const { return config_; }
  nn::ParameterStore<float>& params() { return store_; }
  const nn::ParameterStore<float>& params() const { return store_; }

  nn::Tensor<float> logits(const nn::Tensor<float>& x, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const nn::Tensor<float>& grad_logits);

  std::vector<int> predict(std::span<const Image> images, int batch_size = 64) const;

 private:
  ClassifierConfig config_;
  nn::ParameterStore<float> store_;
  std::vector<nn::Conv2d<float>> convs_;
  nn::Linear<float> head_;
};

// Per-sample image transform applied on the fly during training.
using ImageTransform = std::function<Image(const Image& image, std::uint64_t seed)>;

struct ClassifierTrainLog {
  std::vector<double> losses;
  std::vector<std::string> warnings;
};

// Cross-entropy training with Adam. Starts from init when given, otherwise
// from a fresh seeded initialization; config.steps steps are run.
BrailleClassifier train_classifier(const LabeledImages& data, const ClassifierConfig& config,
                                   const ImageTransform& augment = nullptr,
                                   const BrailleClassifier* init = nullptr,
                                   ClassifierTrainLog* log = nullptr);

}  // namespace tacdiff
