// Copyright 2026 The mpox-screen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mpox/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "mpox/error.hpp"

namespace mpox::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void RequireRank(const Shape& s, std::size_t rank, std::string_view layer) {
  if (s.size() != rank) {
    Fail(ErrorCode::kInvalidArgument, std::string(layer) + " expects rank-" +
                                          std::to_string(rank) + " input, got " + ToString(s));
  }
}

struct Geometry {
  int in_h, in_w, channels, out_h, out_w;
  Padding2D pad;
};

/// (ky, kx, c)-ordered patch rows, one per output pixel.
template <typename T>
void Im2Col(const T* input, const Geometry& g, int kh, int kw, int sh, int sw, T* col) {
  const int k = kh * kw * g.channels;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      T* row = col + static_cast<std::size_t>(oy * g.out_w + ox) * k;
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * sh - g.pad.top + ky;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * sw - g.pad.left + kx;
          T* dst = row + (ky * kw + kx) * g.channels;
          if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) {
            std::fill(dst, dst + g.channels, T(0));
          } else {
            const T* src = input + (static_cast<std::size_t>(iy) * g.in_w + ix) * g.channels;
            std::copy(src, src + g.channels, dst);
          }
        }
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const T* col, const Geometry& g, int kh, int kw, int sh, int sw, T* grad) {
  const int k = kh * kw * g.channels;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const T* row = col + static_cast<std::size_t>(oy * g.out_w + ox) * k;
      for (int ky = 0; ky < kh; ++ky) {
        const int iy = oy * sh - g.pad.top + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int ix = ox * sw - g.pad.left + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          const T* src = row + (ky * kw + kx) * g.channels;
          T* dst = grad + (static_cast<std::size_t>(iy) * g.in_w + ix) * g.channels;
          for (int c = 0; c < g.channels; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

int OutExtent(int in, int pad_before, int pad_after, int k, int stride) {
  const int span = in + pad_before + pad_after - k;
  if (span < 0) return 0;
  return span / stride + 1;
}

}  // namespace

std::string ToString(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Padding2D ComputePadding(PadMode mode, int in_h, int in_w, int kh, int kw, int sh, int sw) {
  if (mode == PadMode::kValid) return {};
  const int out_h = (in_h + sh - 1) / sh;
  const int out_w = (in_w + sw - 1) / sw;
  const int total_h = std::max((out_h - 1) * sh + kh - in_h, 0);
  const int total_w = std::max((out_w - 1) * sw + kw - in_w, 0);
  return {total_h / 2, total_h - total_h / 2, total_w / 2, total_w - total_w / 2};
}

template <typename T>
Parameter<T>& Layer<T>::AddParam(std::string name, Shape shape, bool optimizable) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value.assign(NumElements(shape), T(0));
  p.grad.assign(p.value.size(), T(0));
  p.shape = std::move(shape);
  p.optimizable = optimizable;
  params_.push_back(std::move(p));
  return params_.back();
}

// ---------------------------------------------------------------------------
// Conv2D

template <typename T>
Conv2D<T>::Conv2D(int in_channels, Conv2DOptions options)
    : in_channels_(in_channels), opt_(options) {
  if (in_channels <= 0 || opt_.filters <= 0 || opt_.kernel_h <= 0 || opt_.kernel_w <= 0 ||
      opt_.stride_h <= 0 || opt_.stride_w <= 0) {
    Fail(ErrorCode::kInvalidArgument, "conv2d: dimensions must be positive");
  }
  this->AddParam("kernel", {opt_.kernel_h, opt_.kernel_w, in_channels, opt_.filters});
  if (opt_.use_bias) this->AddParam("bias", {opt_.filters});
}

template <typename T>
Padding2D Conv2D<T>::PaddingFor(int in_h, int in_w) const {
  if (opt_.explicit_padding) return opt_.padding;
  return ComputePadding(opt_.mode, in_h, in_w, opt_.kernel_h, opt_.kernel_w, opt_.stride_h,
                        opt_.stride_w);
}

template <typename T>
Shape Conv2D<T>::OutputShape(std::span<const Shape> inputs) const {
  RequireRank(inputs[0], 3, "conv2d");
  if (inputs[0][2] != in_channels_) {
    Fail(ErrorCode::kInvalidArgument, "conv2d: expected " + std::to_string(in_channels_) +
                                          " channels, got " + ToString(inputs[0]));
  }
  const Padding2D p = PaddingFor(inputs[0][0], inputs[0][1]);
  const int oh = OutExtent(inputs[0][0], p.top, p.bottom, opt_.kernel_h, opt_.stride_h);
  const int ow = OutExtent(inputs[0][1], p.left, p.right, opt_.kernel_w, opt_.stride_w);
  if (oh <= 0 || ow <= 0) {
    Fail(ErrorCode::kInvalidArgument, "conv2d: input " + ToString(inputs[0]) + " is too small");
  }
  return {oh, ow, opt_.filters};
}

template <typename T>
void Conv2D<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                        const RunContext<T>&) const {
  const Tensor<T>& x = *in[0];
  const Shape os = OutputShape(std::span<const Shape>(&x.sample_shape, 1));
  out = Tensor<T>(x.batch, os);
  const Geometry g{x.sample_shape[0], x.sample_shape[1], in_channels_, os[0], os[1],
                   PaddingFor(x.sample_shape[0], x.sample_shape[1])};
  const int k = opt_.kernel_h * opt_.kernel_w * in_channels_;
  const int rows = g.out_h * g.out_w;
  const bool pointwise = opt_.kernel_h == 1 && opt_.kernel_w == 1 && opt_.stride_h == 1 &&
                         opt_.stride_w == 1 && g.pad.top == 0 && g.pad.left == 0;
  ConstMatMap<T> w(this->params_[0].value.data(), k, opt_.filters);
  std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(rows) * k);
  for (int n = 0; n < x.batch; ++n) {
    const T* src = x.sample(n);
    if (!pointwise) {
      Im2Col(src, g, opt_.kernel_h, opt_.kernel_w, opt_.stride_h, opt_.stride_w, col.data());
      src = col.data();
    }
    MatMap<T> y(out.sample(n), rows, opt_.filters);
    y.noalias() = ConstMatMap<T>(src, rows, k) * w;
    if (opt_.use_bias) {
      y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
          this->params_[1].value.data(), opt_.filters);
    }
  }
}

template <typename T>
void Conv2D<T>::Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                         const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in,
                         bool param_grads, const RunContext<T>&) {
  const Tensor<T>& x = *in[0];
  const Geometry g{x.sample_shape[0], x.sample_shape[1], in_channels_, out.sample_shape[0],
                   out.sample_shape[1], PaddingFor(x.sample_shape[0], x.sample_shape[1])};
  const int k = opt_.kernel_h * opt_.kernel_w * in_channels_;
  const int rows = g.out_h * g.out_w;
  const bool pointwise = opt_.kernel_h == 1 && opt_.kernel_w == 1 && opt_.stride_h == 1 &&
                         opt_.stride_w == 1 && g.pad.top == 0 && g.pad.left == 0;
  ConstMatMap<T> w(this->params_[0].value.data(), k, opt_.filters);
  MatMap<T> dw(this->params_[0].grad.data(), k, opt_.filters);
  std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(rows) * k);
  std::vector<T> dcol(pointwise ? 0 : static_cast<std::size_t>(rows) * k);
  for (int n = 0; n < x.batch; ++n) {
    ConstMatMap<T> dy(grad_out.sample(n), rows, opt_.filters);
    if (param_grads) {
      const T* src = x.sample(n);
      if (!pointwise) {
        Im2Col(src, g, opt_.kernel_h, opt_.kernel_w, opt_.stride_h, opt_.stride_w, col.data());
        src = col.data();
      }
      dw.noalias() += ConstMatMap<T>(src, rows, k).transpose() * dy;
      if (opt_.use_bias) {
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(this->params_[1].grad.data(),
                                                           opt_.filters);
        db += dy.colwise().sum();
      }
    }
    if (grad_in[0] != nullptr) {
      if (pointwise) {
        MatMap<T> dx(grad_in[0]->sample(n), rows, k);
        dx.noalias() += dy * w.transpose();
      } else {
        MatMap<T> dc(dcol.data(), rows, k);
        dc.noalias() = dy * w.transpose();
        Col2ImAdd(dcol.data(), g, opt_.kernel_h, opt_.kernel_w, opt_.stride_h, opt_.stride_w,
                  grad_in[0]->sample(n));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(int channels, double epsilon, bool scale, double momentum)
    : channels_(channels), epsilon_(epsilon), scale_(scale), momentum_(momentum) {
  if (scale_) {
    auto& gamma = this->AddParam("gamma", {channels});
    std::fill(gamma.value.begin(), gamma.value.end(), T(1));
  }
  this->AddParam("beta", {channels});
  this->AddParam("moving_mean", {channels}, false);
  auto& var = this->AddParam("moving_variance", {channels}, false);
  std::fill(var.value.begin(), var.value.end(), T(1));
}

template <typename T>
void BatchNorm<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                           const RunContext<T>& ctx) const {
  const Tensor<T>& x = *in[0];
  out = Tensor<T>(x.batch, x.sample_shape);
  const std::size_t c = static_cast<std::size_t>(channels_);
  const std::size_t m = x.data.size() / c;
  const std::size_t base = scale_ ? 1 : 0;
  const T* beta = this->params_[base].value.data();
  const T* mm = this->params_[base + 1].value.data();
  const T* mv = this->params_[base + 2].value.data();
  std::vector<T> gamma(c, T(1));
  if (scale_) std::copy_n(this->params_[0].value.begin(), c, gamma.begin());

  if (!(ctx.training && ctx.trainable)) {
    std::vector<T> mul(c), add(c);
    for (std::size_t j = 0; j < c; ++j) {
      const T inv = T(1) / std::sqrt(mv[j] + static_cast<T>(epsilon_));
      mul[j] = gamma[j] * inv;
      add[j] = beta[j] - mm[j] * mul[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] = x.data[i * c + j] * mul[j] + add[j];
    }
    return;
  }

  std::vector<double> mean(c, 0.0), var(c, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) mean[j] += x.data[i * c + j];
  }
  for (auto& v : mean) v /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double d = x.data[i * c + j] - mean[j];
      var[j] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<double>(m);

  NodeCache<T>& cache = *ctx.cache;
  cache.values.resize(x.data.size());
  cache.aux.resize(3 * c);
  for (std::size_t j = 0; j < c; ++j) {
    cache.aux[j] = static_cast<T>(mean[j]);
    cache.aux[c + j] = static_cast<T>(var[j]);
    cache.aux[2 * c + j] = static_cast<T>(1.0 / std::sqrt(var[j] + epsilon_));
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const T xhat = (x.data[i * c + j] - cache.aux[j]) * cache.aux[2 * c + j];
      cache.values[i * c + j] = xhat;
      out.data[i * c + j] = gamma[j] * xhat + beta[j];
    }
  }
}

template <typename T>
void BatchNorm<T>::Backward(std::span<const Tensor<T>* const> in, const Tensor<T>&,
                            const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in,
                            bool param_grads, const RunContext<T>& ctx) {
  const Tensor<T>& x = *in[0];
  const std::size_t c = static_cast<std::size_t>(channels_);
  const std::size_t m = x.data.size() / c;
  const std::size_t base = scale_ ? 1 : 0;
  std::vector<T> gamma(c, T(1));
  if (scale_) std::copy_n(this->params_[0].value.begin(), c, gamma.begin());
  const bool batch_stats = ctx.training && ctx.trainable && ctx.cache != nullptr &&
                           !ctx.cache->values.empty();

  std::vector<T> xhat_buf;
  const T* xhat = nullptr;
  std::vector<T> inv_std(c);
  if (batch_stats) {
    xhat = ctx.cache->values.data();
    for (std::size_t j = 0; j < c; ++j) inv_std[j] = ctx.cache->aux[2 * c + j];
  } else {
    const T* mm = this->params_[base + 1].value.data();
    const T* mv = this->params_[base + 2].value.data();
    xhat_buf.resize(x.data.size());
    for (std::size_t j = 0; j < c; ++j) inv_std[j] = T(1) / std::sqrt(mv[j] + static_cast<T>(epsilon_));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < c; ++j) xhat_buf[i * c + j] = (x.data[i * c + j] - mm[j]) * inv_std[j];
    }
    xhat = xhat_buf.data();
  }

  std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double dy = grad_out.data[i * c + j];
      sum_dy[j] += dy;
      sum_dy_xhat[j] += dy * xhat[i * c + j];
    }
  }
  if (param_grads) {
    if (scale_) {
      for (std::size_t j = 0; j < c; ++j) this->params_[0].grad[j] += static_cast<T>(sum_dy_xhat[j]);
    }
    for (std::size_t j = 0; j < c; ++j) this->params_[base].grad[j] += static_cast<T>(sum_dy[j]);
  }
  if (grad_in[0] == nullptr) return;
  T* dx = grad_in[0]->data.data();
  if (!batch_stats) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += grad_out.data[i * c + j] * gamma[j] * inv_std[j];
    }
    return;
  }
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double dxhat_term = md * grad_out.data[i * c + j] - sum_dy[j] -
                                xhat[i * c + j] * sum_dy_xhat[j];
      dx[i * c + j] += static_cast<T>(gamma[j] * inv_std[j] * dxhat_term / md);
    }
  }
}

template <typename T>
void BatchNorm<T>::CommitStatistics(const NodeCache<T>& cache) {
  if (cache.aux.empty()) return;
  const std::size_t c = static_cast<std::size_t>(channels_);
  const std::size_t base = scale_ ? 1 : 0;
  T* mm = this->params_[base + 1].value.data();
  T* mv = this->params_[base + 2].value.data();
  const std::size_t m = cache.values.size() / c;
  const double bessel = m > 1 ? static_cast<double>(m) / static_cast<double>(m - 1) : 1.0;
  for (std::size_t j = 0; j < c; ++j) {
    mm[j] = static_cast<T>(momentum_ * mm[j] + (1.0 - momentum_) * cache.aux[j]);
    mv[j] = static_cast<T>(momentum_ * mv[j] + (1.0 - momentum_) * cache.aux[c + j] * bessel);
  }
}

// ---------------------------------------------------------------------------
// Relu

template <typename T>
void Relu<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                      const RunContext<T>&) const {
  const Tensor<T>& x = *in[0];
  out = Tensor<T>(x.batch, x.sample_shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
}

template <typename T>
void Relu<T>::Backward(std::span<const Tensor<T>* const>, const Tensor<T>& out,
                       const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool,
                       const RunContext<T>&) {
  if (grad_in[0] == nullptr) return;
  T* dx = grad_in[0]->data.data();
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (out.data[i] > T(0)) dx[i] += grad_out.data[i];
  }
}

// ---------------------------------------------------------------------------
// Pool2D

template <typename T>
Padding2D Pool2D<T>::PaddingFor(int in_h, int in_w) const {
  if (opt_.explicit_padding) return opt_.padding;
  return ComputePadding(opt_.mode, in_h, in_w, opt_.size, opt_.size, opt_.stride, opt_.stride);
}

template <typename T>
Shape Pool2D<T>::OutputShape(std::span<const Shape> inputs) const {
  RequireRank(inputs[0], 3, kind());
  const Padding2D p = PaddingFor(inputs[0][0], inputs[0][1]);
  const int oh = OutExtent(inputs[0][0], p.top, p.bottom, opt_.size, opt_.stride);
  const int ow = OutExtent(inputs[0][1], p.left, p.right, opt_.size, opt_.stride);
  if (oh <= 0 || ow <= 0) {
    Fail(ErrorCode::kInvalidArgument, std::string(kind()) + ": input " + ToString(inputs[0]) +
                                          " is too small");
  }
  return {oh, ow, inputs[0][2]};
}

template <typename T>
void Pool2D<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                        const RunContext<T>& ctx) const {
  const Tensor<T>& x = *in[0];
  const Shape os = OutputShape(std::span<const Shape>(&x.sample_shape, 1));
  out = Tensor<T>(x.batch, os);
  const int h = x.sample_shape[0], w = x.sample_shape[1], c = x.sample_shape[2];
  const Padding2D p = PaddingFor(h, w);
  const bool track = opt_.kind == PoolKind::kMax && ctx.cache != nullptr;
  if (track) ctx.cache->indices.assign(out.data.size(), -1);
  for (int n = 0; n < x.batch; ++n) {
    const T* src = x.sample(n);
    T* dst = out.sample(n);
    for (int oy = 0; oy < os[0]; ++oy) {
      const int y0 = std::max(oy * opt_.stride - p.top, 0);
      const int y1 = std::min(oy * opt_.stride - p.top + opt_.size, h);
      for (int ox = 0; ox < os[1]; ++ox) {
        const int x0 = std::max(ox * opt_.stride - p.left, 0);
        const int x1 = std::min(ox * opt_.stride - p.left + opt_.size, w);
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t o = (static_cast<std::size_t>(oy) * os[1] + ox) * c + ch;
          if (opt_.kind == PoolKind::kMax) {
            T best = -std::numeric_limits<T>::infinity();
            std::int32_t arg = -1;
            for (int yy = y0; yy < y1; ++yy) {
              for (int xx = x0; xx < x1; ++xx) {
                const std::int32_t idx = (yy * w + xx) * c + ch;
                if (src[idx] > best) {
                  best = src[idx];
                  arg = idx;
                }
              }
            }
            dst[o] = best;
            if (track) ctx.cache->indices[static_cast<std::size_t>(n) * out.sample_size() + o] = arg;
          } else {
            T sum = 0;
            for (int yy = y0; yy < y1; ++yy) {
              for (int xx = x0; xx < x1; ++xx) sum += src[(yy * w + xx) * c + ch];
            }
            dst[o] = sum / static_cast<T>((y1 - y0) * (x1 - x0));
          }
        }
      }
    }
  }
}

template <typename T>
void Pool2D<T>::Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                         const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool,
                         const RunContext<T>& ctx) {
  if (grad_in[0] == nullptr) return;
  const Tensor<T>& x = *in[0];
  const int h = x.sample_shape[0], w = x.sample_shape[1], c = x.sample_shape[2];
  const Shape& os = out.sample_shape;
  const Padding2D p = PaddingFor(h, w);
  if (opt_.kind == PoolKind::kMax) {
    if (ctx.cache == nullptr || ctx.cache->indices.size() != out.data.size()) {
      Fail(ErrorCode::kInternal, "max_pool backward without a training forward pass");
    }
    for (int n = 0; n < x.batch; ++n) {
      T* dx = grad_in[0]->sample(n);
      const T* dy = grad_out.sample(n);
      const std::int32_t* idx = ctx.cache->indices.data() + static_cast<std::size_t>(n) * out.sample_size();
      for (std::size_t o = 0; o < out.sample_size(); ++o) {
        if (idx[o] >= 0) dx[idx[o]] += dy[o];
      }
    }
    return;
  }
  for (int n = 0; n < x.batch; ++n) {
    T* dx = grad_in[0]->sample(n);
    const T* dy = grad_out.sample(n);
    for (int oy = 0; oy < os[0]; ++oy) {
      const int y0 = std::max(oy * opt_.stride - p.top, 0);
      const int y1 = std::min(oy * opt_.stride - p.top + opt_.size, h);
      for (int ox = 0; ox < os[1]; ++ox) {
        const int x0 = std::max(ox * opt_.stride - p.left, 0);
        const int x1 = std::min(ox * opt_.stride - p.left + opt_.size, w);
        const T scale = T(1) / static_cast<T>((y1 - y0) * (x1 - x0));
        for (int ch = 0; ch < c; ++ch) {
          const T g = dy[(static_cast<std::size_t>(oy) * os[1] + ox) * c + ch] * scale;
          for (int yy = y0; yy < y1; ++yy) {
            for (int xx = x0; xx < x1; ++xx) dx[(yy * w + xx) * c + ch] += g;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Add / Concat / Flatten

template <typename T>
Shape Add<T>::OutputShape(std::span<const Shape> inputs) const {
  for (const auto& s : inputs) {
    if (s != inputs[0]) {
      Fail(ErrorCode::kInvalidArgument, "add: mismatched shapes " + ToString(inputs[0]) +
                                            " and " + ToString(s));
    }
  }
  return inputs[0];
}

template <typename T>
void Add<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                     const RunContext<T>&) const {
  out = *in[0];
  for (std::size_t k = 1; k < in.size(); ++k) {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += in[k]->data[i];
  }
}

template <typename T>
void Add<T>::Backward(std::span<const Tensor<T>* const>, const Tensor<T>&,
                      const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool,
                      const RunContext<T>&) {
  for (Tensor<T>* g : grad_in) {
    if (g == nullptr) continue;
    for (std::size_t i = 0; i < g->data.size(); ++i) g->data[i] += grad_out.data[i];
  }
}

template <typename T>
Shape Concat<T>::OutputShape(std::span<const Shape> inputs) const {
  Shape out = inputs[0];
  RequireRank(out, 3, "concat");
  out[2] = 0;
  for (const auto& s : inputs) {
    RequireRank(s, 3, "concat");
    if (s[0] != out[0] || s[1] != out[1]) {
      Fail(ErrorCode::kInvalidArgument, "concat: spatial mismatch " + ToString(inputs[0]) +
                                            " vs " + ToString(s));
    }
    out[2] += s[2];
  }
  return out;
}

template <typename T>
void Concat<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                        const RunContext<T>&) const {
  std::vector<Shape> shapes;
  for (const auto* t : in) shapes.push_back(t->sample_shape);
  const Shape os = OutputShape(shapes);
  out = Tensor<T>(in[0]->batch, os);
  const std::size_t pixels = static_cast<std::size_t>(os[0]) * os[1];
  for (int n = 0; n < out.batch; ++n) {
    T* dst = out.sample(n);
    int offset = 0;
    for (const auto* t : in) {
      const int c = t->sample_shape[2];
      const T* src = t->sample(n);
      for (std::size_t px = 0; px < pixels; ++px) {
        std::copy_n(src + px * c, c, dst + px * os[2] + offset);
      }
      offset += c;
    }
  }
}

template <typename T>
void Concat<T>::Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                         const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool,
                         const RunContext<T>&) {
  const Shape& os = out.sample_shape;
  const std::size_t pixels = static_cast<std::size_t>(os[0]) * os[1];
  int offset = 0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const int c = in[k]->sample_shape[2];
    if (grad_in[k] != nullptr) {
      for (int n = 0; n < out.batch; ++n) {
        const T* src = grad_out.sample(n);
        T* dst = grad_in[k]->sample(n);
        for (std::size_t px = 0; px < pixels; ++px) {
          for (int ch = 0; ch < c; ++ch) dst[px * c + ch] += src[px * os[2] + offset + ch];
        }
      }
    }
    offset += c;
  }
}

template <typename T>
Shape Flatten<T>::OutputShape(std::span<const Shape> inputs) const {
  return {static_cast<int>(NumElements(inputs[0]))};
}

template <typename T>
void Flatten<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                         const RunContext<T>&) const {
  out.batch = in[0]->batch;
  out.sample_shape = {static_cast<int>(in[0]->sample_size())};
  out.data = in[0]->data;
}

template <typename T>
void Flatten<T>::Backward(std::span<const Tensor<T>* const>, const Tensor<T>&,
                          const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool,
                          const RunContext<T>&) {
  if (grad_in[0] == nullptr) return;
  for (std::size_t i = 0; i < grad_out.data.size(); ++i) grad_in[0]->data[i] += grad_out.data[i];
}

// ---------------------------------------------------------------------------
// Dense

template <typename T>
Dense<T>::Dense(int in_features, int out_features) : in_(in_features), out_(out_features) {
  if (in_features <= 0 || out_features <= 0) {
    Fail(ErrorCode::kInvalidArgument, "dense: feature counts must be positive");
  }
  this->AddParam("kernel", {in_features, out_features});
  this->AddParam("bias", {out_features});
}

template <typename T>
Shape Dense<T>::OutputShape(std::span<const Shape> inputs) const {
  if (inputs[0].size() != 1 || inputs[0][0] != in_) {
    Fail(ErrorCode::kInvalidArgument, "dense: expected [" + std::to_string(in_) + "], got " +
                                          ToString(inputs[0]));
  }
  return {out_};
}

template <typename T>
void Dense<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                       const RunContext<T>&) const {
  const Tensor<T>& x = *in[0];
  OutputShape(std::span<const Shape>(&x.sample_shape, 1));
  out = Tensor<T>(x.batch, {out_});
  MatMap<T> y(out.data.data(), x.batch, out_);
  y.noalias() = ConstMatMap<T>(x.data.data(), x.batch, in_) *
                ConstMatMap<T>(this->params_[0].value.data(), in_, out_);
  y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
      this->params_[1].value.data(), out_);
}

template <typename T>
void Dense<T>::Backward(std::span<const Tensor<T>* const> in, const Tensor<T>&,
                        const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in,
                        bool param_grads, const RunContext<T>&) {
  const Tensor<T>& x = *in[0];
  ConstMatMap<T> dy(grad_out.data.data(), x.batch, out_);
  if (param_grads) {
    MatMap<T> dw(this->params_[0].grad.data(), in_, out_);
    dw.noalias() += ConstMatMap<T>(x.data.data(), x.batch, in_).transpose() * dy;
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(this->params_[1].grad.data(), out_);
    db += dy.colwise().sum();
  }
  if (grad_in[0] != nullptr) {
    MatMap<T> dx(grad_in[0]->data.data(), x.batch, in_);
    dx.noalias() += dy * ConstMatMap<T>(this->params_[0].value.data(), in_, out_).transpose();
  }
}

// ---------------------------------------------------------------------------
// Dropout

template <typename T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "dropout rate must lie in [0, 1)");
  }
}

template <typename T>
void Dropout<T>::Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                         const RunContext<T>& ctx) const {
  out = *in[0];
  if (!ctx.training || rate_ == 0.0) {
    if (ctx.cache != nullptr) ctx.cache->values.clear();
    return;
  }
  if (ctx.rng == nullptr || ctx.cache == nullptr) {
    Fail(ErrorCode::kInternal, "dropout training pass needs a generator and a cache");
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
  auto& mask = ctx.cache->values;
  mask.resize(out.data.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    mask[i] = ctx.rng->Bernoulli(rate_) ? T(0) : keep_scale;
    out.data[i] *= mask[i];
  }
}

template <typename T>
void Dropout<T>::Backward(std::span<const Tensor<T>* const>, const Tensor<T>&,
                          const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool,
                          const RunContext<T>& ctx) {
  if (grad_in[0] == nullptr) return;
  const bool masked = ctx.cache != nullptr && !ctx.cache->values.empty();
  for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
    grad_in[0]->data[i] += masked ? grad_out.data[i] * ctx.cache->values[i] : grad_out.data[i];
  }
}

#define MPOX_INSTANTIATE_LAYERS(T) \
  template class Layer<T>;         \
  template class Conv2D<T>;        \
  template class BatchNorm<T>;     \
  template class Relu<T>;          \
  template class Pool2D<T>;        \
  template class Add<T>;           \
  template class Concat<T>;        \
  template class Flatten<T>;       \
  template class Dense<T>;         \
  template class Dropout<T>;

MPOX_INSTANTIATE_LAYERS(float)
MPOX_INSTANTIATE_LAYERS(double)

#undef MPOX_INSTANTIATE_LAYERS

}  // namespace mpox::nn
