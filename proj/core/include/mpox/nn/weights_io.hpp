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


#ifndef MPOX_NN_WEIGHTS_IO_HPP_
#define MPOX_NN_WEIGHTS_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mpox/nn/network.hpp"

namespace mpox::nn {

/// One named float32 tensor of a weights blob.
struct NamedTensor {
  std::string name;  // "<node>/<param>"
  Shape shape;
  std::vector<float> values;
};

/// Blob layout, little-endian: "MPXW", u32 version, u32 count, then per
/// tensor u32 name length, name, u32 rank, u32 dims, f32 values.
std::vector<std::uint8_t> EncodeWeights(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> DecodeWeights(std::span<const std::uint8_t> blob,
                                       const std::string& origin = "<weights>");

std::vector<NamedTensor> ExportParameters(const Network<float>& net);

/// Copies tensors into parameters with matching name and shape. Unknown
/// names and shape mismatches throw kDataLoss; so do parameters absent
/// from `tensors` unless `allow_missing`. Returns how many were loaded.
std::size_t ImportParameters(Network<float>& net, std::span<const NamedTensor> tensors,
                             bool allow_missing = false);

void SaveWeights(const Network<float>& net, const std::filesystem::path& path);
std::size_t LoadWeights(Network<float>& net, const std::filesystem::path& path,
                        bool allow_missing = false);

}  // namespace mpox::nn

#endif  // MPOX_NN_WEIGHTS_IO_HPP_
