// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tacdiff/nn/params.hpp"

namespace tacdiff::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables it.
  double max_grad_norm = 1.0;
};

// Adaptive-moment optimizer over a flat ParameterStore. The moment buffers
// and step counter are public so checkpoints can persist and restore them.
struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  std::int64_t step = 0;
};

template <class T>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

  // Applies one update from the store's accumulated gradients.
  // Returns the gradient norm before clipping.
  double step(ParameterStore<T>& store) {
    auto values = store.values();
    auto grads = store.grads();
    if (state_.m.size() != values.size()) {
      state_.m.assign(values.size(), 0.0f);
      state_.v.assign(values.size(), 0.0f);
    }
    double norm2 = 0.0;
    for (T g : grads) norm2 += static_cast<double>(g) * g;
    const double norm = std::sqrt(norm2);
    const double scale =
        options_.max_grad_norm > 0.0 && norm > options_.max_grad_norm
            ? options_.max_grad_norm / norm
            : 1.0;
    ++state_.step;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state_.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state_.step));
    const double lr = options_.learning_rate;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i] * scale;
      const double m = b1 * state_.m[i] + (1.0 - b1) * g;
      const double v = b2 * state_.v[i] + (1.0 - b2) * g * g;
      state_.m[i] = static_cast<float>(m);
      state_.v[i] = static_cast<float>(v);
      values[i] -= static_cast<T>(lr * (m / c1) / (std::sqrt(v / c2) + options_.epsilon));
    }
    return norm;
  }

 private:
  AdamOptions options_;
  AdamState state_;
};

}  // namespace tacdiff::nn
