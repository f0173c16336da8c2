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


#ifndef MPOX_NN_OPTIMIZER_HPP_
#define MPOX_NN_OPTIMIZER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mpox/nn/layers.hpp"

namespace mpox::nn {

struct AdamOptions {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Adam with the bias correction folded into the step size. The parameter
/// list must be the same, in the same order, on every Step.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options) : opt_(options) {}

  void Step(std::span<Parameter<T>* const> params);

  std::int64_t iterations() const { return t_; }

 private:
  AdamOptions opt_;
  std::int64_t t_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

}  // namespace mpox::nn

#endif  // MPOX_NN_OPTIMIZER_HPP_
