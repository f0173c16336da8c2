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


#include "mpox/nn/optimizer.hpp"

#include <cmath>

#include "mpox/error.hpp"

namespace mpox::nn {

template <typename T>
void Adam<T>::Step(std::span<Parameter<T>* const> params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.size(), T(0));
      v_.emplace_back(p->value.size(), T(0));
    }
  }
  if (m_.size() != params.size()) {
    Fail(ErrorCode::kInternal, "optimizer parameter list changed between steps");
  }
  ++t_;
  const double alpha = opt_.learning_rate *
                       std::sqrt(1.0 - std::pow(opt_.beta2, static_cast<double>(t_))) /
                       (1.0 - std::pow(opt_.beta1, static_cast<double>(t_)));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = *params[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = m[i] + (g - m[i]) * (1.0 - opt_.beta1);
      const double vi = v[i] + (g * g - v[i]) * (1.0 - opt_.beta2);
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      p.value[i] = static_cast<T>(p.value[i] - alpha * mi / (std::sqrt(vi) + opt_.epsilon));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace mpox::nn
