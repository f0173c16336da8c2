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


#ifndef MPOX_NN_BACKBONES_HPP_
#define MPOX_NN_BACKBONES_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

#include "mpox/image.hpp"
#include "mpox/nn/network.hpp"

namespace mpox::nn {

enum class BackboneId { kVgg16, kResNet50, kInceptionV3, kTinyTestCnn };

inline constexpr BackboneId kAllBackbones[] = {BackboneId::kVgg16, BackboneId::kResNet50,
                                               BackboneId::kInceptionV3,
                                               BackboneId::kTinyTestCnn};

/// "vgg16", "resnet50", "inceptionv3", "tiny_test_cnn".
std::string_view BackboneName(BackboneId id);
BackboneId ParseBackboneId(std::string_view name);

/// Appends the convolutional feature extractor (no classifier top) to
/// `net`, reading from `input`, and returns the id of its last node. Node
/// names follow the Keras application models so exported weights can be
/// matched by name.
template <typename T>
int BuildBackbone(BackboneId id, Network<T>& net, int input = kNetworkInput);

/// Maps 8-bit RGB to the value range each backbone was trained on:
/// [0,1] for the tiny model, Caffe-style BGR mean subtraction for VGG16
/// and ResNet50, [-1,1] for InceptionV3. Writes H*W*3 values.
template <typename T>
void PreprocessImage(BackboneId id, const Image& image, T* out);

/// Ids of nodes holding parameters, in node order, up to and including
/// `last`.
template <typename T>
std::vector<int> WeightedNodes(const Network<T>& net, int last);

/// Seeded fan-in-scaled uniform initialization for nodes [first, last]:
/// convolution kernels use limit sqrt(6/fan_in), dense kernels
/// 1/sqrt(fan_in); biases stay zero. Each tensor draws from its own
/// stream derived from (seed, node name, parameter name).
template <typename T>
void InitializeParameters(Network<T>& net, int first, int last, std::uint64_t seed);

}  // namespace mpox::nn

#endif  // MPOX_NN_BACKBONES_HPP_
