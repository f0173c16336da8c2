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


#ifndef MPOX_NN_TENSOR_HPP_
#define MPOX_NN_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace mpox::nn {

/// Per-sample shape: {H, W, C} for feature maps, {F} for vectors.
using Shape = std::vector<int>;

inline std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::string ToString(const Shape& shape);

/// Dense batch tensor in NHWC (or N x F) order.
template <typename T>
struct Tensor {
  int batch = 0;
  Shape sample_shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n, Shape shape, T fill = T(0))
      : batch(n), sample_shape(std::move(shape)),
        data(static_cast<std::size_t>(n) * NumElements(sample_shape), fill) {}

  std::size_t sample_size() const { return NumElements(sample_shape); }
  T* sample(int n) { return data.data() + static_cast<std::size_t>(n) * sample_size(); }
  const T* sample(int n) const { return data.data() + static_cast<std::size_t>(n) * sample_size(); }

  bool empty() const { return data.empty(); }
  void Release() {
    data.clear();
    data.shrink_to_fit();
  }
};

}  // namespace mpox::nn

#endif  // MPOX_NN_TENSOR_HPP_
