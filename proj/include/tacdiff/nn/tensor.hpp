// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace tacdiff::nn {

// Storage with a fixed alignment, so vectorized kernels follow the same code
// path, and summation order, on every run.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

// Dense NCHW tensor. Fully connected activations use H = W = 1.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, T fill = T(0))
      : n_(n), c_(c), h_(h), w_(w), data_(static_cast<std::size_t>(n) * c * h * w, fill) {}

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  int plane() const { return h_ * w_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }
  std::string shape_string() const {
    return std::to_string(n_) + "x" + std::to_string(c_) + "x" + std::to_string(h_) + "x" +
           std::to_string(w_);
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* sample(int i) { return data_.data() + static_cast<std::size_t>(i) * c_ * h_ * w_; }
  const T* sample(int i) const {
    return data_.data() + static_cast<std::size_t>(i) * c_ * h_ * w_;
  }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }
  T& at(int i, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(i) * c_ + c) * h_ + y) * w_ + x];
  }
  T at(int i, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(i) * c_ + c) * h_ + y) * w_ + x];
  }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  // Same values under a new shape with equal element count.
  Tensor reshaped(int n, int c, int h, int w) const& {
    Tensor t(*this);
    return std::move(t).reshaped(n, c, h, w);
  }
  Tensor reshaped(int n, int c, int h, int w) && {
    if (static_cast<std::size_t>(n) * c * h * w != data_.size()) {
      throw std::invalid_argument("reshape " + shape_string() + " changes the element count");
    }
    n_ = n, c_ = c, h_ = h, w_ = w;
    return std::move(*this);
  }

  Tensor& operator+=(const Tensor& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  AlignedVector<T> data_;
};

// Channel-wise concatenation [a ; b] and its inverse.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
void split_channels(const Tensor<T>& ab, int channels_a, Tensor<T>* da, Tensor<T>* db);

}  // namespace tacdiff::nn
