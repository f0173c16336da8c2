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


#include "mpox/nn/network.hpp"

#include <algorithm>

#include "mpox/error.hpp"

namespace mpox::nn {

template <typename T>
Network<T>::Network(Shape input_shape) : input_shape_(std::move(input_shape)) {}

template <typename T>
const Shape& Network<T>::shape(int id) const {
  return id == kNetworkInput ? input_shape_ : node(id).shape;
}

template <typename T>
int Network<T>::AddNode(std::string name, std::unique_ptr<Layer<T>> layer,
                        std::vector<int> inputs) {
  if (inputs.empty()) Fail(ErrorCode::kInvalidArgument, "node '" + name + "' has no inputs");
  std::vector<Shape> in_shapes;
  for (int id : inputs) {
    if (id != kNetworkInput && (id < 0 || id >= size())) {
      Fail(ErrorCode::kInvalidArgument, "node '" + name + "' refers to unknown input " +
                                            std::to_string(id));
    }
    in_shapes.push_back(shape(id));
  }
  Node n;
  n.shape = layer->OutputShape(in_shapes);
  n.name = std::move(name);
  n.layer = std::move(layer);
  n.inputs = std::move(inputs);
  nodes_.push_back(std::move(n));
  return size() - 1;
}

template <typename T>
Tensor<T> Network<T>::Infer(const Tensor<T>& input) const {
  if (input.sample_shape != input_shape_) {
    Fail(ErrorCode::kInvalidArgument, "network expects input " + ToString(input_shape_) +
                                          ", got " + ToString(input.sample_shape));
  }
  const int out_id = output();
  std::vector<int> uses(nodes_.size(), 0);
  for (const auto& n : nodes_) {
    for (int id : n.inputs) {
      if (id != kNetworkInput) ++uses[id];
    }
  }
  std::vector<Tensor<T>> acts(nodes_.size());
  std::vector<const Tensor<T>*> in;
  RunContext<T> ctx;
  for (int i = 0; i <= out_id; ++i) {
    const Node& n = nodes_[i];
    in.clear();
    for (int id : n.inputs) in.push_back(id == kNetworkInput ? &input : &acts[id]);
    ctx.trainable = n.trainable;
    n.layer->Forward(in, acts[i], ctx);
    for (int id : n.inputs) {
      if (id != kNetworkInput && --uses[id] == 0 && id != out_id) acts[id].Release();
    }
  }
  return std::move(acts[out_id]);
}

template <typename T>
std::vector<bool> Network<T>::BackwardRegion() const {
  std::vector<bool> region(nodes_.size(), false);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    bool has_params = false;
    for (const auto& p : n.layer->params()) has_params = has_params || p.optimizable;
    region[i] = n.trainable && has_params;
    for (int id : n.inputs) {
      if (id != kNetworkInput && region[id]) region[i] = true;
    }
  }
  return region;
}

template <typename T>
Tensor<T> Network<T>::ForwardTrain(const Tensor<T>& input, Rng& rng, TrainingPass& pass) {
  if (input.sample_shape != input_shape_) {
    Fail(ErrorCode::kInvalidArgument, "network expects input " + ToString(input_shape_) +
                                          ", got " + ToString(input.sample_shape));
  }
  const int out_id = output();
  const std::vector<bool> region = BackwardRegion();
  pass.activations.assign(nodes_.size(), Tensor<T>());
  pass.caches.assign(nodes_.size(), NodeCache<T>());
  pass.kept.assign(nodes_.size(), false);
  std::vector<int> uses(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (region[i]) pass.kept[i] = true;
    for (int id : nodes_[i].inputs) {
      if (id == kNetworkInput) continue;
      ++uses[id];
      if (region[i]) pass.kept[id] = true;
    }
  }
  std::vector<const Tensor<T>*> in;
  RunContext<T> ctx;
  ctx.training = true;
  ctx.rng = &rng;
  for (int i = 0; i <= out_id; ++i) {
    Node& n = nodes_[i];
    in.clear();
    for (int id : n.inputs) in.push_back(id == kNetworkInput ? &input : &pass.activations[id]);
    ctx.trainable = n.trainable;
    ctx.cache = &pass.caches[i];
    n.layer->Forward(in, pass.activations[i], ctx);
    for (int id : n.inputs) {
      if (id != kNetworkInput && --uses[id] == 0 && !pass.kept[id] && id != out_id) {
        pass.activations[id].Release();
      }
    }
  }
  return pass.activations[out_id];
}

template <typename T>
void Network<T>::Backward(const Tensor<T>& input, TrainingPass& pass,
                          const Tensor<T>& grad_output) {
  const int out_id = output();
  if (pass.activations.size() != nodes_.size()) {
    Fail(ErrorCode::kFailedPrecondition, "backward without a matching training pass");
  }
  if (grad_output.data.size() != pass.activations[out_id].data.size()) {
    Fail(ErrorCode::kInvalidArgument, "output gradient has the wrong size");
  }
  const std::vector<bool> region = BackwardRegion();
  std::vector<Tensor<T>> grads(nodes_.size());
  grads[out_id] = grad_output;
  std::vector<const Tensor<T>*> in;
  std::vector<Tensor<T>*> grad_in;
  RunContext<T> ctx;
  ctx.training = true;
  for (int i = out_id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!region[i] || grads[i].empty()) continue;
    in.clear();
    grad_in.clear();
    for (int id : n.inputs) {
      in.push_back(id == kNetworkInput ? &input : &pass.activations[id]);
      if (id != kNetworkInput && region[id]) {
        if (grads[id].empty()) grads[id] = Tensor<T>(pass.activations[id].batch, nodes_[id].shape);
        grad_in.push_back(&grads[id]);
      } else {
        grad_in.push_back(nullptr);
      }
    }
    ctx.trainable = n.trainable;
    ctx.cache = &pass.caches[i];
    n.layer->Backward(in, pass.activations[i], grads[i], grad_in, n.trainable, ctx);
    grads[i].Release();
  }
}

template <typename T>
void Network<T>::CommitStatistics(const TrainingPass& pass) {
  for (std::size_t i = 0; i < nodes_.size() && i < pass.caches.size(); ++i) {
    if (nodes_[i].trainable) nodes_[i].layer->CommitStatistics(pass.caches[i]);
  }
}

template <typename T>
void Network<T>::ZeroGrad() {
  for (auto& n : nodes_) {
    for (auto& p : n.layer->params()) std::fill(p.grad.begin(), p.grad.end(), T(0));
  }
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::TrainableParameters() {
  std::vector<Parameter<T>*> out;
  for (auto& n : nodes_) {
    if (!n.trainable) continue;
    for (auto& p : n.layer->params()) {
      if (p.optimizable) out.push_back(&p);
    }
  }
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::AllParameters() {
  std::vector<Parameter<T>*> out;
  for (auto& n : nodes_) {
    for (auto& p : n.layer->params()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Network<T>::AllParameters() const {
  std::vector<const Parameter<T>*> out;
  for (const auto& n : nodes_) {
    for (const auto& p : n.layer->params()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::size_t Network<T>::ParameterCount() const {
  std::size_t total = 0;
  for (const auto* p : AllParameters()) total += p->value.size();
  return total;
}

template <typename T>
std::size_t Network<T>::TrainableParameterCount() const {
  std::size_t total = 0;
  for (const auto& n : nodes_) {
    if (!n.trainable) continue;
    for (const auto& p : n.layer->params()) {
      if (p.optimizable) total += p.value.size();
    }
  }
  return total;
}

template class Network<float>;
template class Network<double>;

}  // namespace mpox::nn
