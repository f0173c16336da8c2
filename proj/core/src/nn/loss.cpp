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


#include "mpox/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "mpox/error.hpp"

namespace mpox::nn {

template <typename T>
Tensor<T> Softmax(const Tensor<T>& logits) {
  if (logits.sample_shape.size() != 1) {
    Fail(ErrorCode::kInvalidArgument, "softmax expects N x K logits");
  }
  const int k = logits.sample_shape[0];
  Tensor<T> out(logits.batch, logits.sample_shape);
  for (int n = 0; n < logits.batch; ++n) {
    const T* z = logits.sample(n);
    T* p = out.sample(n);
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - zmax);
    for (int j = 0; j < k; ++j) p[j] = static_cast<T>(std::exp(static_cast<double>(z[j]) - zmax) / sum);
  }
  return out;
}

template <typename T>
double SoftmaxCrossEntropy(const Tensor<T>& logits, std::span<const int> labels,
                           Tensor<T>* grad) {
  if (logits.sample_shape.size() != 1 || static_cast<std::size_t>(logits.batch) != labels.size() ||
      logits.batch == 0) {
    Fail(ErrorCode::kInvalidArgument, "cross-entropy: logits and labels disagree");
  }
  const int k = logits.sample_shape[0];
  if (grad != nullptr) *grad = Tensor<T>(logits.batch, logits.sample_shape);
  double total = 0.0;
  for (int n = 0; n < logits.batch; ++n) {
    const int y = labels[n];
    if (y < 0 || y >= k) Fail(ErrorCode::kInvalidArgument, "cross-entropy: label out of range");
    const T* z = logits.sample(n);
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j]) - zmax);
    const double log_sum = std::log(sum) + zmax;
    total += log_sum - static_cast<double>(z[y]);
    if (grad != nullptr) {
      T* g = grad->sample(n);
      for (int j = 0; j < k; ++j) {
        const double p = std::exp(static_cast<double>(z[j]) - log_sum);
        g[j] = static_cast<T>((p - (j == y ? 1.0 : 0.0)) / logits.batch);
      }
    }
  }
  return total / logits.batch;
}

template Tensor<float> Softmax(const Tensor<float>&);
template Tensor<double> Softmax(const Tensor<double>&);
template double SoftmaxCrossEntropy(const Tensor<float>&, std::span<const int>, Tensor<float>*);
template double SoftmaxCrossEntropy(const Tensor<double>&, std::span<const int>, Tensor<double>*);

}  // namespace mpox::nn
