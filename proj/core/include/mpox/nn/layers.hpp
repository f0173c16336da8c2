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


#ifndef MPOX_NN_LAYERS_HPP_
#define MPOX_NN_LAYERS_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpox/nn/tensor.hpp"
#include "mpox/random.hpp"

namespace mpox::nn {

template <typename T>
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  /// Moving statistics and the like: persisted but never optimized.
  bool optimizable = true;
};

/// Scratch data a layer keeps between its training forward and backward.
template <typename T>
struct NodeCache {
  std::vector<T> values;
  std::vector<T> aux;
  std::vector<std::int32_t> indices;
};

template <typename T>
struct RunContext {
  bool training = false;
  /// Layers with trainable parameters use batch statistics when training.
  bool trainable = false;
  Rng* rng = nullptr;
  NodeCache<T>* cache = nullptr;  // null for inference
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string_view kind() const = 0;
  virtual Shape OutputShape(std::span<const Shape> inputs) const = 0;

  /// Computes `out` from `in`. Must be safe to call concurrently when
  /// ctx.cache is null.
  virtual void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
                       const RunContext<T>& ctx) const = 0;

  /// Accumulates parameter gradients when `param_grads` is set and writes
  /// (accumulates) input gradients into non-null `grad_in` slots.
  virtual void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                        const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in,
                        bool param_grads, const RunContext<T>& ctx) = 0;

  /// Applied after a training forward pass (batch-norm moving averages).
  virtual void CommitStatistics(const NodeCache<T>& /*cache*/) {}

  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }

 protected:
  Parameter<T>& AddParam(std::string name, Shape shape, bool optimizable = true);

  std::vector<Parameter<T>> params_;
};

/// Explicit zero padding in pixels.
struct Padding2D {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

enum class PadMode { kValid, kSame };

/// TensorFlow "same" padding: the odd pixel goes to the bottom/right.
Padding2D ComputePadding(PadMode mode, int in_h, int in_w, int kh, int kw, int sh, int sw);

struct Conv2DOptions {
  int filters = 1;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 1;
  int stride_w = 1;
  PadMode mode = PadMode::kSame;
  /// Overrides `mode` when set.
  bool explicit_padding = false;
  Padding2D padding;
  bool use_bias = true;
};

template <typename T>
class Conv2D final : public Layer<T> {
 public:
  Conv2D(int in_channels, Conv2DOptions options);

  std::string_view kind() const override { return "conv2d"; }
  Shape OutputShape(std::span<const Shape> inputs) const override;
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;

  const Conv2DOptions& options() const { return opt_; }

 private:
  Padding2D PaddingFor(int in_h, int in_w) const;

  int in_channels_;
  Conv2DOptions opt_;
};

template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  BatchNorm(int channels, double epsilon, bool scale = true, double momentum = 0.99);

  std::string_view kind() const override { return "batch_norm"; }
  Shape OutputShape(std::span<const Shape> inputs) const override { return inputs[0]; }
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;
  void CommitStatistics(const NodeCache<T>& cache) override;

 private:
  int channels_;
  double epsilon_;
  bool scale_;
  double momentum_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  std::string_view kind() const override { return "relu"; }
  Shape OutputShape(std::span<const Shape> inputs) const override { return inputs[0]; }
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;
};

enum class PoolKind { kMax, kAverage };

struct Pool2DOptions {
  PoolKind kind = PoolKind::kMax;
  int size = 2;
  int stride = 2;
  PadMode mode = PadMode::kValid;
  bool explicit_padding = false;
  Padding2D padding;
};

/// Padded cells are ignored: max over real cells, average over real cells.
template <typename T>
class Pool2D final : public Layer<T> {
 public:
  explicit Pool2D(Pool2DOptions options) : opt_(options) {}

  std::string_view kind() const override {
    return opt_.kind == PoolKind::kMax ? "max_pool" : "avg_pool";
  }
  Shape OutputShape(std::span<const Shape> inputs) const override;
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;

 private:
  Padding2D PaddingFor(int in_h, int in_w) const;

  Pool2DOptions opt_;
};

template <typename T>
class Add final : public Layer<T> {
 public:
  std::string_view kind() const override { return "add"; }
  Shape OutputShape(std::span<const Shape> inputs) const override;
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;
};

/// Channel-axis concatenation of feature maps with equal H and W.
template <typename T>
class Concat final : public Layer<T> {
 public:
  std::string_view kind() const override { return "concat"; }
  Shape OutputShape(std::span<const Shape> inputs) const override;
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  std::string_view kind() const override { return "flatten"; }
  Shape OutputShape(std::span<const Shape> inputs) const override;
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;
};

template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(int in_features, int out_features);

  std::string_view kind() const override { return "dense"; }
  Shape OutputShape(std::span<const Shape> inputs) const override;
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;

  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_;
  int out_;
};

/// Inverted dropout: kept activations are scaled by 1/(1-rate) in training,
/// identity at inference.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(double rate);

  std::string_view kind() const override { return "dropout"; }
  Shape OutputShape(std::span<const Shape> inputs) const override { return inputs[0]; }
  void Forward(std::span<const Tensor<T>* const> in, Tensor<T>& out,
               const RunContext<T>& ctx) const override;
  void Backward(std::span<const Tensor<T>* const> in, const Tensor<T>& out,
                const Tensor<T>& grad_out, std::span<Tensor<T>* const> grad_in, bool param_grads,
                const RunContext<T>& ctx) override;

  double rate() const { return rate_; }

 private:
  double rate_;
};

}  // namespace mpox::nn

#endif  // MPOX_NN_LAYERS_HPP_
