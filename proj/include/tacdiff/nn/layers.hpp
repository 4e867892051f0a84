// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "tacdiff/nn/params.hpp"
#include "tacdiff/nn/tensor.hpp"
#include "tacdiff/rng.hpp"

namespace tacdiff::nn {

// Layers are stateless descriptors: parameters live in a ParameterStore and
// every backward() receives the forward input again instead of caching it.
// backward() accumulates into the store's gradient buffer.

// Square convolution with zero padding kernel/2; kernel 1 or 3, stride 1 or 2.
template <class T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore<T>& store, const std::string& name, int in_channels, int out_channels,
         int kernel, int stride = 1);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero bias; all zeros if zero_init.
  void init(ParameterStore<T>& store, Rng& rng, bool zero_init = false) const;

  Tensor<T> forward(const ParameterStore<T>& store, const Tensor<T>& x) const;
  Tensor<T> backward(ParameterStore<T>& store, const Tensor<T>& x, const Tensor<T>& dy,
                     bool need_input_grad = true) const;

  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }
  std::size_t parameter_count() const { return weight_.size + bias_.size; }

 private:
  int cin_ = 0, cout_ = 0, kernel_ = 1, stride_ = 1;
  ParamRef weight_, bias_;
};

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, int in_features, int out_features);

  void init(ParameterStore<T>& store, Rng& rng, bool zero_init = false) const;
  // x is N x in x 1 x 1.
  Tensor<T> forward(const ParameterStore<T>& store, const Tensor<T>& x) const;
  Tensor<T> backward(ParameterStore<T>& store, const Tensor<T>& x, const Tensor<T>& dy) const;

  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_ = 0, out_ = 0;
  ParamRef weight_, bias_;
};

template <class T>
struct GroupNormStats {
  std::vector<T> mean;
  std::vector<T> rstd;
};

// Per-sample group normalization with a learned per-channel affine map.
template <class T>
class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(ParameterStore<T>& store, const std::string& name, int channels, int groups);

  void init(ParameterStore<T>& store) const;
  Tensor<T> forward(const ParameterStore<T>& store, const Tensor<T>& x,
                    GroupNormStats<T>* stats = nullptr) const;
  Tensor<T> backward(ParameterStore<T>& store, const Tensor<T>& x, const Tensor<T>& dy,
                     const GroupNormStats<T>& stats) const;

  int groups() const { return groups_; }

 private:
  int channels_ = 0, groups_ = 1;
  T eps_ = T(1e-5);
  ParamRef gamma_, beta_;
};

// Largest divisor of `channels` that does not exceed `preferred`.
int group_count(int channels, int preferred);

template <class T>
Tensor<T> silu(const Tensor<T>& x);
template <class T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy);

template <class T>
Tensor<T> relu(const Tensor<T>& x);
template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

// Nearest-neighbour 2x upsampling and its adjoint.
template <class T>
Tensor<T> upsample2(const Tensor<T>& x);
template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& dy);

// 2x2 average pooling (even sizes only) and its adjoint.
template <class T>
Tensor<T> avgpool2(const Tensor<T>& x);
template <class T>
Tensor<T> avgpool2_backward(const Tensor<T>& dy);

// Mean over H x W, producing N x C x 1 x 1.
template <class T>
Tensor<T> global_avgpool(const Tensor<T>& x);
template <class T>
Tensor<T> global_avgpool_backward(const Tensor<T>& dy, int height, int width);

// Adds a per-sample, per-channel bias (N x C x 1 x 1) to every pixel.
template <class T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias);
template <class T>
Tensor<T> channel_bias_backward(const Tensor<T>& dy);

}  // namespace tacdiff::nn
