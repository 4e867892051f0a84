// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tacdiff/nn/layers.hpp"

#include <Eigen/Core>
#include <bit>
#include <cmath>
#include <cstring>

#include "tacdiff/errors.hpp"

namespace tacdiff::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;
template <class T>
using Arr = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <class T>
using ConstArr = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

template <class T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// Output rows per im2col tile so that one tile stays within ~512 KiB.
int tile_rows(int k, int ow, int oh, std::size_t elem) {
  const std::size_t budget = 512 * 1024;
  const std::size_t per_row = static_cast<std::size_t>(k) * ow * elem;
  return std::clamp(static_cast<int>(budget / std::max<std::size_t>(per_row, 1)), 1, oh);
}

int conv_out(int size, int kernel, int stride) {
  const int pad = kernel / 2;
  return (size + 2 * pad - kernel) / stride + 1;
}

// Unfolds output rows [row_begin, row_end) of one C x H x W sample into a
// (C*k*k) x ((row_end - row_begin) * OW) matrix.
template <class T>
void im2col(const T* x, int channels, int height, int width, int kernel, int stride, T* col,
            int row_begin, int row_end) {
  const int pad = kernel / 2;
  const int ow = conv_out(width, kernel, stride);
  const std::size_t cols = static_cast<std::size_t>(row_end - row_begin) * ow;
  for (int c = 0; c < channels; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        T* row = col + ((static_cast<std::size_t>(c) * kernel + ky) * kernel + kx) * cols;
        for (int oy = row_begin; oy < row_end; ++oy) {
          const int iy = oy * stride + ky - pad;
          T* dst = row + static_cast<std::size_t>(oy - row_begin) * ow;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * width;
          if (stride == 1) {
            const int shift = kx - pad;
            const int lo = std::max(0, -shift);
            const int hi = std::min(ow, width - shift);
            std::fill(dst, dst + lo, T(0));
            if (hi > lo) std::memcpy(dst + lo, src + lo + shift, sizeof(T) * (hi - lo));
            std::fill(dst + std::max(hi, lo), dst + ow, T(0));
          } else {
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride + kx - pad;
              dst[ox] = (ix >= 0 && ix < width) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters a column matrix back onto the input grid.
template <class T>
void col2im(const T* col, int channels, int height, int width, int kernel, int stride, T* x) {
  const int pad = kernel / 2;
  const int oh = conv_out(height, kernel, stride);
  const int ow = conv_out(width, kernel, stride);
  std::fill(x, x + static_cast<std::size_t>(channels) * height * width, T(0));
  for (int c = 0; c < channels; ++c) {
    T* plane = x + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const T* row =
            col + ((static_cast<std::size_t>(c) * kernel + ky) * kernel + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= height) continue;
          const T* src = row + static_cast<std::size_t>(oy) * ow;
          T* dst = plane + static_cast<std::size_t>(iy) * width;
          if (stride == 1) {
            const int shift = kx - pad;
            const int lo = std::max(0, -shift);
            const int hi = std::min(ow, width - shift);
            for (int ox = lo; ox < hi; ++ox) dst[ox + shift] += src[ox];
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <class T>
void fill_uniform(T* p, std::size_t n, T bound, Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <class T>
Conv2d<T>::Conv2d(ParameterStore<T>& store, const std::string& name, int in_channels,
                  int out_channels, int kernel, int stride)
    : cin_(in_channels), cout_(out_channels), kernel_(kernel), stride_(stride) {
  if ((kernel != 1 && kernel != 3) || (stride != 1 && stride != 2) || cin_ <= 0 || cout_ <= 0) {
    throw ConfigError("unsupported convolution " + name);
  }
  weight_ = store.add(name + ".weight", static_cast<std::size_t>(cout_) * cin_ * kernel * kernel);
  bias_ = store.add(name + ".bias", cout_);
}

template <class T>
void Conv2d<T>::init(ParameterStore<T>& store, Rng& rng, bool zero_init) const {
  T* w = store.value(weight_);
  std::fill(store.value(bias_), store.value(bias_) + bias_.size, T(0));
  if (zero_init) {
    std::fill(w, w + weight_.size, T(0));
    return;
  }
  const T bound = T(1) / std::sqrt(static_cast<T>(cin_ * kernel_ * kernel_));
  fill_uniform(w, weight_.size, bound, rng);
}

template <class T>
Tensor<T> Conv2d<T>::forward(const ParameterStore<T>& store, const Tensor<T>& x) const {
  if (x.c() != cin_) {
    throw ArgumentError("conv expects " + std::to_string(cin_) + " channels, got " +
                        x.shape_string());
  }
  const int oh = conv_out(x.h(), kernel_, stride_);
  const int ow = conv_out(x.w(), kernel_, stride_);
  const int k = cin_ * kernel_ * kernel_;
  const int p = oh * ow;
  Tensor<T> y(x.n(), cout_, oh, ow);
  ConstMapMat<T> w(store.value(weight_), cout_, k);
  const T* b = store.value(bias_);
  const bool direct = kernel_ == 1 && stride_ == 1;
  const int tile = tile_rows(k, ow, oh, sizeof(T));
  AlignedVector<T> col(direct ? 0 : static_cast<std::size_t>(k) * tile * ow);
  for (int i = 0; i < x.n(); ++i) {
    MapMat<T> out(y.sample(i), cout_, p);
    if (direct) {
      out.noalias() = w * ConstMapMat<T>(x.sample(i), k, p);
    } else {
      for (int r0 = 0; r0 < oh; r0 += tile) {
        const int r1 = std::min(oh, r0 + tile);
        const int cols = (r1 - r0) * ow;
        im2col(x.sample(i), cin_, x.h(), x.w(), kernel_, stride_, col.data(), r0, r1);
        StridedMap<T>(y.sample(i) + static_cast<std::size_t>(r0) * ow, cout_, cols,
                      Eigen::OuterStride<>(p))
            .noalias() = w * ConstMapMat<T>(col.data(), k, cols);
      }
    }
    for (int c = 0; c < cout_; ++c) out.row(c).array() += b[c];
  }
  return y;
}

template <class T>
Tensor<T> Conv2d<T>::backward(ParameterStore<T>& store, const Tensor<T>& x, const Tensor<T>& dy,
                              bool need_input_grad) const {
  const int k = cin_ * kernel_ * kernel_;
  const int oh = dy.h();
  const int ow = dy.w();
  const int p = oh * ow;
  ConstMapMat<T> w(store.value(weight_), cout_, k);
  MapMat<T> dw(store.grad(weight_), cout_, k);
  T* db = store.grad(bias_);
  const bool direct = kernel_ == 1 && stride_ == 1;
  const int tile = tile_rows(k, ow, oh, sizeof(T));
  AlignedVector<T> col(direct ? 0 : static_cast<std::size_t>(k) * tile * ow);
  AlignedVector<T> dcol(need_input_grad && !direct ? static_cast<std::size_t>(k) * p : 0);
  Tensor<T> dx;
  if (need_input_grad) dx = Tensor<T>(x.n(), x.c(), x.h(), x.w());
  for (int i = 0; i < x.n(); ++i) {
    ConstMapMat<T> g(dy.sample(i), cout_, p);
    for (int c = 0; c < cout_; ++c) db[c] += g.row(c).sum();
    if (direct) {
      dw.noalias() += g * ConstMapMat<T>(x.sample(i), k, p).transpose();
      if (need_input_grad) MapMat<T>(dx.sample(i), k, p).noalias() = w.transpose() * g;
      continue;
    }
    for (int r0 = 0; r0 < oh; r0 += tile) {
      const int r1 = std::min(oh, r0 + tile);
      const int cols = (r1 - r0) * ow;
      im2col(x.sample(i), cin_, x.h(), x.w(), kernel_, stride_, col.data(), r0, r1);
      dw.noalias() += ConstStridedMap<T>(dy.sample(i) + static_cast<std::size_t>(r0) * ow, cout_,
                                         cols, Eigen::OuterStride<>(p)) *
                      ConstMapMat<T>(col.data(), k, cols).transpose();
    }
    if (need_input_grad) {
      MapMat<T>(dcol.data(), k, p).noalias() = w.transpose() * g;
      col2im(dcol.data(), cin_, x.h(), x.w(), kernel_, stride_, dx.sample(i));
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Linear

template <class T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, int in_features,
                  int out_features)
    : in_(in_features), out_(out_features) {
  weight_ = store.add(name + ".weight", static_cast<std::size_t>(in_) * out_);
  bias_ = store.add(name + ".bias", out_);
}

template <class T>
void Linear<T>::init(ParameterStore<T>& store, Rng& rng, bool zero_init) const {
  T* w = store.value(weight_);
  std::fill(store.value(bias_), store.value(bias_) + bias_.size, T(0));
  if (zero_init) {
    std::fill(w, w + weight_.size, T(0));
    return;
  }
  fill_uniform(w, weight_.size, T(1) / std::sqrt(static_cast<T>(in_)), rng);
}

template <class T>
Tensor<T> Linear<T>::forward(const ParameterStore<T>& store, const Tensor<T>& x) const {
  if (static_cast<int>(x.size() / std::max(1, x.n())) != in_) {
    throw ArgumentError("linear expects " + std::to_string(in_) + " features");
  }
  Tensor<T> y(x.n(), out_, 1, 1);
  ConstMapMat<T> w(store.value(weight_), out_, in_);
  MapMat<T> out(y.data(), x.n(), out_);
  out.noalias() = ConstMapMat<T>(x.data(), x.n(), in_) * w.transpose();
  const T* b = store.value(bias_);
  for (int i = 0; i < x.n(); ++i)
    for (int o = 0; o < out_; ++o) out(i, o) += b[o];
  return y;
}

template <class T>
Tensor<T> Linear<T>::backward(ParameterStore<T>& store, const Tensor<T>& x,
                              const Tensor<T>& dy) const {
  ConstMapMat<T> g(dy.data(), x.n(), out_);
  ConstMapMat<T> in(x.data(), x.n(), in_);
  MapMat<T>(store.grad(weight_), out_, in_).noalias() += g.transpose() * in;
  T* db = store.grad(bias_);
  for (int i = 0; i < x.n(); ++i)
    for (int o = 0; o < out_; ++o) db[o] += g(i, o);
  Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
  MapMat<T>(dx.data(), x.n(), in_).noalias() = g * ConstMapMat<T>(store.value(weight_), out_, in_);
  return dx;
}

// ---------------------------------------------------------------- GroupNorm

int group_count(int channels, int preferred) {
  for (int g = std::min(channels, std::max(1, preferred)); g > 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

template <class T>
GroupNorm<T>::GroupNorm(ParameterStore<T>& store, const std::string& name, int channels,
                        int groups)
    : channels_(channels), groups_(groups) {
  if (groups <= 0 || channels % groups != 0) {
    throw ConfigError(name + ": channels not divisible by groups");
  }
  gamma_ = store.add(name + ".gamma", channels);
  beta_ = store.add(name + ".beta", channels);
}

template <class T>
void GroupNorm<T>::init(ParameterStore<T>& store) const {
  std::fill(store.value(gamma_), store.value(gamma_) + channels_, T(1));
  std::fill(store.value(beta_), store.value(beta_) + channels_, T(0));
}

template <class T>
Tensor<T> GroupNorm<T>::forward(const ParameterStore<T>& store, const Tensor<T>& x,
                                GroupNormStats<T>* stats) const {
  const int cpg = channels_ / groups_;
  const Eigen::Index plane = x.plane();
  const Eigen::Index count = plane * cpg;
  const T* gamma = store.value(gamma_);
  const T* beta = store.value(beta_);
  Tensor<T> y(x.n(), x.c(), x.h(), x.w());
  if (stats) {
    stats->mean.assign(static_cast<std::size_t>(x.n()) * groups_, T(0));
    stats->rstd.assign(static_cast<std::size_t>(x.n()) * groups_, T(0));
  }
  for (int i = 0; i < x.n(); ++i) {
    for (int g = 0; g < groups_; ++g) {
      ConstArr<T> src(x.sample(i) + g * count, count);
      const T mean = src.mean();
      const T var = (src - mean).square().mean();
      const T rstd = T(1) / std::sqrt(var + eps_);
      if (stats) {
        stats->mean[i * groups_ + g] = mean;
        stats->rstd[i * groups_ + g] = rstd;
      }
      for (int c = 0; c < cpg; ++c) {
        const int ch = g * cpg + c;
        const T scale = rstd * gamma[ch];
        const T shift = beta[ch] - mean * scale;
        Arr<T>(y.sample(i) + g * count + c * plane, plane) =
            ConstArr<T>(x.sample(i) + g * count + c * plane, plane) * scale + shift;
      }
    }
  }
  return y;
}

template <class T>
Tensor<T> GroupNorm<T>::backward(ParameterStore<T>& store, const Tensor<T>& x,
                                 const Tensor<T>& dy, const GroupNormStats<T>& stats) const {
  const int cpg = channels_ / groups_;
  const Eigen::Index plane = x.plane();
  const Eigen::Index count = plane * cpg;
  const T* gamma = store.value(gamma_);
  T* dgamma = store.grad(gamma_);
  T* dbeta = store.grad(beta_);
  Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
  for (int i = 0; i < x.n(); ++i) {
    for (int g = 0; g < groups_; ++g) {
      const T mean = stats.mean[i * groups_ + g];
      const T rstd = stats.rstd[i * groups_ + g];
      // sums of dxhat and dxhat * xhat over the group
      T s1 = 0, s2 = 0;
      for (int c = 0; c < cpg; ++c) {
        const int ch = g * cpg + c;
        const Eigen::Index off = g * count + c * plane;
        ConstArr<T> gy(dy.sample(i) + off, plane);
        const T gsum = gy.sum();
        const T gxsum = (gy * ((ConstArr<T>(x.sample(i) + off, plane) - mean) * rstd)).sum();
        dbeta[ch] += gsum;
        dgamma[ch] += gxsum;
        s1 += gsum * gamma[ch];
        s2 += gxsum * gamma[ch];
      }
      const T m1 = s1 / count;
      const T m2 = s2 / count;
      for (int c = 0; c < cpg; ++c) {
        const T gm = gamma[g * cpg + c];
        const Eigen::Index off = g * count + c * plane;
        ConstArr<T> src(x.sample(i) + off, plane);
        ConstArr<T> gy(dy.sample(i) + off, plane);
        Arr<T>(dx.sample(i) + off, plane) =
            rstd * (gy * gm - m1 - (src - mean) * (rstd * m2));
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- elementwise

template <class T>
Tensor<T> silu(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), x.h(), x.w());
  ConstArr<T> in(x.data(), x.size());
  Arr<T>(y.data(), y.size()) = in / (T(1) + (-in).exp());
  return y;
}

template <class T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
  ConstArr<T> in(x.data(), x.size());
  const auto s = (T(1) / (T(1) + (-in).exp())).eval();
  Arr<T>(dx.data(), dx.size()) = ConstArr<T>(dy.data(), dy.size()) * s * (T(1) + in * (T(1) - s));
  return dx;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), x.h(), x.w());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  return dx;
}

template <class T>
Tensor<T> upsample2(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), x.h() * 2, x.w() * 2);
  for (int i = 0; i < x.n(); ++i)
    for (int c = 0; c < x.c(); ++c)
      for (int yy = 0; yy < y.h(); ++yy)
        for (int xx = 0; xx < y.w(); ++xx) y.at(i, c, yy, xx) = x.at(i, c, yy / 2, xx / 2);
  return y;
}

template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.n(), dy.c(), dy.h() / 2, dy.w() / 2);
  for (int i = 0; i < dy.n(); ++i)
    for (int c = 0; c < dy.c(); ++c)
      for (int yy = 0; yy < dy.h(); ++yy)
        for (int xx = 0; xx < dy.w(); ++xx) dx.at(i, c, yy / 2, xx / 2) += dy.at(i, c, yy, xx);
  return dx;
}

template <class T>
Tensor<T> avgpool2(const Tensor<T>& x) {
  if (x.h() % 2 || x.w() % 2) throw ArgumentError("avgpool2 needs even spatial size");
  Tensor<T> y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  for (int i = 0; i < x.n(); ++i)
    for (int c = 0; c < x.c(); ++c)
      for (int yy = 0; yy < x.h(); ++yy)
        for (int xx = 0; xx < x.w(); ++xx) y.at(i, c, yy / 2, xx / 2) += x.at(i, c, yy, xx) / T(4);
  return y;
}

template <class T>
Tensor<T> avgpool2_backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.n(), dy.c(), dy.h() * 2, dy.w() * 2);
  for (int i = 0; i < dx.n(); ++i)
    for (int c = 0; c < dx.c(); ++c)
      for (int yy = 0; yy < dx.h(); ++yy)
        for (int xx = 0; xx < dx.w(); ++xx) dx.at(i, c, yy, xx) = dy.at(i, c, yy / 2, xx / 2) / T(4);
  return dx;
}

template <class T>
Tensor<T> global_avgpool(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), 1, 1);
  const std::size_t plane = x.plane();
  for (int i = 0; i < x.n(); ++i)
    for (int c = 0; c < x.c(); ++c) {
      const T* p = x.sample(i) + c * plane;
      double s = 0.0;
      for (std::size_t j = 0; j < plane; ++j) s += p[j];
      y.at(i, c, 0, 0) = static_cast<T>(s / plane);
    }
  return y;
}

template <class T>
Tensor<T> global_avgpool_backward(const Tensor<T>& dy, int height, int width) {
  Tensor<T> dx(dy.n(), dy.c(), height, width);
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  for (int i = 0; i < dy.n(); ++i)
    for (int c = 0; c < dy.c(); ++c) {
      const T g = dy.at(i, c, 0, 0) / static_cast<T>(plane);
      T* p = dx.sample(i) + c * plane;
      std::fill(p, p + plane, g);
    }
  return dx;
}

template <class T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t plane = x.plane();
  for (int i = 0; i < x.n(); ++i)
    for (int c = 0; c < x.c(); ++c) {
      const T b = bias.at(i, c, 0, 0);
      T* p = x.sample(i) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) p[j] += b;
    }
}

template <class T>
Tensor<T> channel_bias_backward(const Tensor<T>& dy) {
  Tensor<T> db(dy.n(), dy.c(), 1, 1);
  const std::size_t plane = dy.plane();
  for (int i = 0; i < dy.n(); ++i)
    for (int c = 0; c < dy.c(); ++c) {
      const T* p = dy.sample(i) + c * plane;
      double s = 0.0;
      for (std::size_t j = 0; j < plane; ++j) s += p[j];
      db.at(i, c, 0, 0) = static_cast<T>(s);
    }
  return db;
}

// ---------------------------------------------------------------- tensor helpers

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ArgumentError("concat_channels: " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  const std::size_t sa = static_cast<std::size_t>(a.c()) * a.plane();
  const std::size_t sb = static_cast<std::size_t>(b.c()) * b.plane();
  for (int i = 0; i < a.n(); ++i) {
    std::copy(a.sample(i), a.sample(i) + sa, out.sample(i));
    std::copy(b.sample(i), b.sample(i) + sb, out.sample(i) + sa);
  }
  return out;
}

template <class T>
void split_channels(const Tensor<T>& ab, int channels_a, Tensor<T>* da, Tensor<T>* db) {
  const int cb = ab.c() - channels_a;
  const std::size_t sa = static_cast<std::size_t>(channels_a) * ab.plane();
  const std::size_t sb = static_cast<std::size_t>(cb) * ab.plane();
  if (da) *da = Tensor<T>(ab.n(), channels_a, ab.h(), ab.w());
  if (db) *db = Tensor<T>(ab.n(), cb, ab.h(), ab.w());
  for (int i = 0; i < ab.n(); ++i) {
    if (da) std::copy(ab.sample(i), ab.sample(i) + sa, da->sample(i));
    if (db) std::copy(ab.sample(i) + sa, ab.sample(i) + sa + sb, db->sample(i));
  }
}

// ---------------------------------------------------------------- ParameterStore

template <class T>
bool ParameterStore<T>::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <class T>
std::uint64_t ParameterStore<T>::checksum() const {
  // FNV-1a over the raw value bytes
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(values_.data());
  for (std::size_t i = 0; i < values_.size() * sizeof(T); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

#define TACDIFF_INSTANTIATE(T)                                                          \
  template class Conv2d<T>;                                                             \
  template class Linear<T>;                                                             \
  template class GroupNorm<T>;                                                          \
  template class ParameterStore<T>;                                                     \
  template Tensor<T> silu(const Tensor<T>&);                                            \
  template Tensor<T> silu_backward(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> relu(const Tensor<T>&);                                            \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> upsample2(const Tensor<T>&);                                       \
  template Tensor<T> upsample2_backward(const Tensor<T>&);                              \
  template Tensor<T> avgpool2(const Tensor<T>&);                                        \
  template Tensor<T> avgpool2_backward(const Tensor<T>&);                               \
  template Tensor<T> global_avgpool(const Tensor<T>&);                                  \
  template Tensor<T> global_avgpool_backward(const Tensor<T>&, int, int);               \
  template void add_channel_bias(Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> channel_bias_backward(const Tensor<T>&);                           \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);               \
  template void split_channels(const Tensor<T>&, int, Tensor<T>*, Tensor<T>*);

TACDIFF_INSTANTIATE(float)
TACDIFF_INSTANTIATE(double)

#undef TACDIFF_INSTANTIATE

}  // namespace tacdiff::nn
