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


#ifndef MPOX_NN_LOSS_HPP_
#define MPOX_NN_LOSS_HPP_

#include <span>

#include "mpox/nn/tensor.hpp"

namespace mpox::nn {

/// Row-wise softmax of an N x K logit tensor, max-shifted.
template <typename T>
Tensor<T> Softmax(const Tensor<T>& logits);

/// Mean categorical cross-entropy of softmax(logits) against class
/// indices. When `grad` is given it receives dLoss/dlogits = (p - y) / N.
template <typename T>
double SoftmaxCrossEntropy(const Tensor<T>& logits, std::span<const int> labels,
                           Tensor<T>* grad = nullptr);

}  // namespace mpox::nn

#endif  // MPOX_NN_LOSS_HPP_
