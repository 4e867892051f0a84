// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tacdiff/nn/tensor.hpp"

namespace tacdiff::nn {

// Location of one named parameter tensor inside a ParameterStore.
struct ParamRef {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ParamEntry {
  std::string name;
  ParamRef ref;
};

// Flat storage of every trainable value of a model together with its
// gradient accumulator. Layers keep ParamRefs into it.
template <class T>
class ParameterStore {
 public:
  ParamRef add(std::string name, std::size_t size) {
    ParamRef ref{values_.size(), size};
    values_.resize(values_.size() + size, T(0));
    grads_.resize(values_.size(), T(0));
    entries_.push_back({std::move(name), ref});
    return ref;
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<ParamEntry>& entries() const { return entries_; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::span<T> grads() { return grads_; }
  std::span<const T> grads() const { return grads_; }

  T* value(const ParamRef& r) { return values_.data() + r.offset; }
  const T* value(const ParamRef& r) const { return values_.data() + r.offset; }
  T* grad(const ParamRef& r) { return grads_.data() + r.offset; }

  void zero_grad() { std::fill(grads_.begin(), grads_.end(), T(0)); }

  bool all_finite() const;
  // Order-sensitive checksum of the exact parameter bits.
  std::uint64_t checksum() const;

 private:
  AlignedVector<T> values_;
  AlignedVector<T> grads_;
  std::vector<ParamEntry> entries_;
};

}  // namespace tacdiff::nn
