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


#ifndef MPOX_NN_NETWORK_HPP_
#define MPOX_NN_NETWORK_HPP_

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "mpox/nn/layers.hpp"
#include "mpox/nn/tensor.hpp"
#include "mpox/random.hpp"

namespace mpox::nn {

/// Node id of the network input in `inputs` lists.
inline constexpr int kNetworkInput = -1;

/// Directed acyclic graph of layers, stored in topological order.
template <typename T>
class Network {
 public:
  struct Node {
    std::string name;
    std::unique_ptr<Layer<T>> layer;
    std::vector<int> inputs;
    Shape shape;
    bool trainable = true;
  };

  /// Activations and per-node scratch of one training forward pass.
  struct TrainingPass {
    std::vector<Tensor<T>> activations;
    std::vector<NodeCache<T>> caches;
    std::vector<bool> kept;
  };

  explicit Network(Shape input_shape);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Appends a node; inputs must already exist. Returns its id.
  int AddNode(std::string name, std::unique_ptr<Layer<T>> layer, std::vector<int> inputs);

  template <typename L, typename... Args>
  int Emplace(std::string name, std::vector<int> inputs, Args&&... args) {
    return AddNode(std::move(name), std::make_unique<L>(std::forward<Args>(args)...),
                   std::move(inputs));
  }

  const Shape& input_shape() const { return input_shape_; }
  const Shape& shape(int id) const;
  int size() const { return static_cast<int>(nodes_.size()); }
  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  /// The output node; the last one added unless set explicitly.
  int output() const { return output_ >= 0 ? output_ : size() - 1; }
  void set_output(int id) { output_ = id; }

  /// Inference pass (dropout off, batch norm on moving statistics).
  /// Thread-safe for concurrent callers.
  Tensor<T> Infer(const Tensor<T>& input) const;

  /// Training forward pass; keeps what Backward needs in `pass`.
  Tensor<T> ForwardTrain(const Tensor<T>& input, Rng& rng, TrainingPass& pass);

  /// Accumulates parameter gradients of trainable nodes from the gradient
  /// of the loss with respect to the output. Nodes upstream of every
  /// trainable node are skipped.
  void Backward(const Tensor<T>& input, TrainingPass& pass, const Tensor<T>& grad_output);

  /// Folds the pass's batch statistics into moving averages.
  void CommitStatistics(const TrainingPass& pass);

  void ZeroGrad();

  /// Parameters updated by the optimizer: optimizable ones on trainable nodes.
  std::vector<Parameter<T>*> TrainableParameters();

  /// Every parameter tensor in node order, including frozen ones and
  /// moving statistics.
  std::vector<Parameter<T>*> AllParameters();
  std::vector<const Parameter<T>*> AllParameters() const;

  std::size_t ParameterCount() const;
  std::size_t TrainableParameterCount() const;

 private:
  /// Marks nodes whose backward step is needed: trainable parametric
  /// nodes and everything downstream of one.
  std::vector<bool> BackwardRegion() const;

  Shape input_shape_;
  std::vector<Node> nodes_;
  int output_ = -1;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace mpox::nn

#endif  // MPOX_NN_NETWORK_HPP_
