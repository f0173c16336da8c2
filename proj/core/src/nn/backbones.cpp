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


#include "mpox/nn/backbones.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "mpox/error.hpp"
#include "mpox/hash.hpp"
#include "mpox/random.hpp"

namespace mpox::nn {
namespace {

template <typename T>
class Builder {
 public:
  explicit Builder(Network<T>& net) : net_(net) {}

  int Conv(const std::string& name, int x, int filters, int kh, int kw, int stride = 1,
           PadMode mode = PadMode::kSame, bool bias = true) {
    Conv2DOptions o;
    o.filters = filters;
    o.kernel_h = kh;
    o.kernel_w = kw;
    o.stride_h = o.stride_w = stride;
    o.mode = mode;
    o.use_bias = bias;
    return net_.template Emplace<Conv2D<T>>(name, {x}, Channels(x), o);
  }

  int ConvPadded(const std::string& name, int x, int filters, int k, int stride, int pad) {
    Conv2DOptions o;
    o.filters = filters;
    o.kernel_h = o.kernel_w = k;
    o.stride_h = o.stride_w = stride;
    o.explicit_padding = true;
    o.padding = {pad, pad, pad, pad};
    return net_.template Emplace<Conv2D<T>>(name, {x}, Channels(x), o);
  }

  int Bn(const std::string& name, int x, double eps, bool scale = true) {
    return net_.template Emplace<BatchNorm<T>>(name, {x}, Channels(x), eps, scale);
  }

  int Relu(const std::string& name, int x) {
    return net_.template Emplace<nn::Relu<T>>(name, {x});
  }

  int Pool(const std::string& name, int x, PoolKind kind, int size, int stride,
           PadMode mode = PadMode::kValid) {
    Pool2DOptions o;
    o.kind = kind;
    o.size = size;
    o.stride = stride;
    o.mode = mode;
    return net_.template Emplace<Pool2D<T>>(name, {x}, o);
  }

  int PoolPadded(const std::string& name, int x, int size, int stride, int pad) {
    Pool2DOptions o;
    o.size = size;
    o.stride = stride;
    o.explicit_padding = true;
    o.padding = {pad, pad, pad, pad};
    return net_.template Emplace<Pool2D<T>>(name, {x}, o);
  }

  int Sum(const std::string& name, std::vector<int> xs) {
    return net_.template Emplace<Add<T>>(name, std::move(xs));
  }

  int Cat(const std::string& name, std::vector<int> xs) {
    return net_.template Emplace<Concat<T>>(name, std::move(xs));
  }

  /// Keras-style automatic names: "conv2d", "conv2d_1", ...
  std::string AutoName(const std::string& prefix) {
    int& n = counters_[prefix];
    std::string name = n == 0 ? prefix : prefix + "_" + std::to_string(n);
    ++n;
    return name;
  }

 private:
  int Channels(int x) const { return net_.shape(x).back(); }

  Network<T>& net_;
  std::unordered_map<std::string, int> counters_;
};

template <typename T>
int BuildTiny(Builder<T>& b, int x) {
  x = b.Relu("tiny_conv1_relu", b.Conv("tiny_conv1", x, 8, 3, 3, 2));
  x = b.Pool("tiny_pool1", x, PoolKind::kMax, 2, 2);
  x = b.Relu("tiny_conv2_relu", b.Conv("tiny_conv2", x, 16, 3, 3, 1));
  x = b.Pool("tiny_pool2", x, PoolKind::kMax, 2, 2);
  x = b.Relu("tiny_conv3_relu", b.Conv("tiny_conv3", x, 32, 3, 3, 2));
  return b.Pool("tiny_pool3", x, PoolKind::kMax, 2, 2);
}

template <typename T>
int BuildVgg16(Builder<T>& b, int x) {
  const int widths[5] = {64, 128, 256, 512, 512};
  const int depth[5] = {2, 2, 3, 3, 3};
  for (int blk = 0; blk < 5; ++blk) {
    const std::string prefix = "block" + std::to_string(blk + 1);
    for (int i = 0; i < depth[blk]; ++i) {
      const std::string name = prefix + "_conv" + std::to_string(i + 1);
      x = b.Relu(name + "_relu", b.Conv(name, x, widths[blk], 3, 3));
    }
    x = b.Pool(prefix + "_pool", x, PoolKind::kMax, 2, 2);
  }
  return x;
}

template <typename T>
int ResidualBlock(Builder<T>& b, int x, int filters, int stride, bool conv_shortcut,
                  const std::string& name) {
  constexpr double kEps = 1.001e-5;
  int shortcut = x;
  if (conv_shortcut) {
    shortcut = b.Conv(name + "_0_conv", x, 4 * filters, 1, 1, stride, PadMode::kValid);
    shortcut = b.Bn(name + "_0_bn", shortcut, kEps);
  }
  x = b.Conv(name + "_1_conv", x, filters, 1, 1, stride, PadMode::kValid);
  x = b.Relu(name + "_1_relu", b.Bn(name + "_1_bn", x, kEps));
  x = b.Conv(name + "_2_conv", x, filters, 3, 3, 1, PadMode::kSame);
  x = b.Relu(name + "_2_relu", b.Bn(name + "_2_bn", x, kEps));
  x = b.Conv(name + "_3_conv", x, 4 * filters, 1, 1, 1, PadMode::kValid);
  x = b.Bn(name + "_3_bn", x, kEps);
  return b.Relu(name + "_out", b.Sum(name + "_add", {shortcut, x}));
}

template <typename T>
int BuildResNet50(Builder<T>& b, int x) {
  x = b.ConvPadded("conv1_conv", x, 64, 7, 2, 3);
  x = b.Relu("conv1_relu", b.Bn("conv1_bn", x, 1.001e-5));
  // Zero padding before the pool is equivalent to ignoring padded cells
  // here because the input is non-negative after the ReLU.
  x = b.PoolPadded("pool1_pool", x, 3, 2, 1);
  const int filters[4] = {64, 128, 256, 512};
  const int blocks[4] = {3, 4, 6, 3};
  for (int s = 0; s < 4; ++s) {
    const std::string stack = "conv" + std::to_string(s + 2);
    x = ResidualBlock(b, x, filters[s], s == 0 ? 1 : 2, true, stack + "_block1");
    for (int i = 2; i <= blocks[s]; ++i) {
      x = ResidualBlock(b, x, filters[s], 1, false, stack + "_block" + std::to_string(i));
    }
  }
  return x;
}

template <typename T>
int ConvBn(Builder<T>& b, int x, int filters, int kh, int kw, int stride = 1,
           PadMode mode = PadMode::kSame) {
  const std::string conv = b.AutoName("conv2d");
  x = b.Conv(conv, x, filters, kh, kw, stride, mode, false);
  x = b.Bn(b.AutoName("batch_normalization"), x, 1e-3, false);
  return b.Relu(conv + "_relu", x);
}

template <typename T>
int AvgPoolSame(Builder<T>& b, int x) {
  return b.Pool(b.AutoName("average_pooling2d"), x, PoolKind::kAverage, 3, 1, PadMode::kSame);
}

template <typename T>
int MaxPool3x3(Builder<T>& b, int x) {
  return b.Pool(b.AutoName("max_pooling2d"), x, PoolKind::kMax, 3, 2);
}

template <typename T>
int BuildInceptionV3(Builder<T>& b, int x) {
  constexpr PadMode kValid = PadMode::kValid;
  x = ConvBn(b, x, 32, 3, 3, 2, kValid);
  x = ConvBn(b, x, 32, 3, 3, 1, kValid);
  x = ConvBn(b, x, 64, 3, 3);
  x = MaxPool3x3(b, x);
  x = ConvBn(b, x, 80, 1, 1, 1, kValid);
  x = ConvBn(b, x, 192, 3, 3, 1, kValid);
  x = MaxPool3x3(b, x);

  // mixed0..2
  for (int i = 0; i < 3; ++i) {
    const int b1 = ConvBn(b, x, 64, 1, 1);
    int b5 = ConvBn(b, x, 48, 1, 1);
    b5 = ConvBn(b, b5, 64, 5, 5);
    int bd = ConvBn(b, x, 64, 1, 1);
    bd = ConvBn(b, bd, 96, 3, 3);
    bd = ConvBn(b, bd, 96, 3, 3);
    int bp = AvgPoolSame(b, x);
    bp = ConvBn(b, bp, i == 0 ? 32 : 64, 1, 1);
    x = b.Cat("mixed" + std::to_string(i), {b1, b5, bd, bp});
  }

  // mixed3
  {
    const int b3 = ConvBn(b, x, 384, 3, 3, 2, kValid);
    int bd = ConvBn(b, x, 64, 1, 1);
    bd = ConvBn(b, bd, 96, 3, 3);
    bd = ConvBn(b, bd, 96, 3, 3, 2, kValid);
    const int bp = MaxPool3x3(b, x);
    x = b.Cat("mixed3", {b3, bd, bp});
  }

  // mixed4..7
  const int mids[4] = {128, 160, 160, 192};
  for (int i = 0; i < 4; ++i) {
    const int m = mids[i];
    const int b1 = ConvBn(b, x, 192, 1, 1);
    int b7 = ConvBn(b, x, m, 1, 1);
    b7 = ConvBn(b, b7, m, 1, 7);
    b7 = ConvBn(b, b7, 192, 7, 1);
    int bd = ConvBn(b, x, m, 1, 1);
    bd = ConvBn(b, bd, m, 7, 1);
    bd = ConvBn(b, bd, m, 1, 7);
    bd = ConvBn(b, bd, m, 7, 1);
    bd = ConvBn(b, bd, 192, 1, 7);
    int bp = AvgPoolSame(b, x);
    bp = ConvBn(b, bp, 192, 1, 1);
    x = b.Cat("mixed" + std::to_string(4 + i), {b1, b7, bd, bp});
  }

  // mixed8
  {
    int b3 = ConvBn(b, x, 192, 1, 1);
    b3 = ConvBn(b, b3, 320, 3, 3, 2, kValid);
    int b7 = ConvBn(b, x, 192, 1, 1);
    b7 = ConvBn(b, b7, 192, 1, 7);
    b7 = ConvBn(b, b7, 192, 7, 1);
    b7 = ConvBn(b, b7, 192, 3, 3, 2, kValid);
    const int bp = MaxPool3x3(b, x);
    x = b.Cat("mixed8", {b3, b7, bp});
  }

  // mixed9..10
  for (int i = 0; i < 2; ++i) {
    const int b1 = ConvBn(b, x, 320, 1, 1);
    int b3 = ConvBn(b, x, 384, 1, 1);
    const int b3a = ConvBn(b, b3, 384, 1, 3);
    const int b3b = ConvBn(b, b3, 384, 3, 1);
    b3 = b.Cat("mixed9_" + std::to_string(i), {b3a, b3b});
    int bd = ConvBn(b, x, 448, 1, 1);
    bd = ConvBn(b, bd, 384, 3, 3);
    const int bda = ConvBn(b, bd, 384, 1, 3);
    const int bdb = ConvBn(b, bd, 384, 3, 1);
    bd = b.Cat(b.AutoName("concatenate"), {bda, bdb});
    int bp = AvgPoolSame(b, x);
    bp = ConvBn(b, bp, 192, 1, 1);
    x = b.Cat("mixed" + std::to_string(9 + i), {b1, b3, bd, bp});
  }
  return x;
}

}  // namespace

std::string_view BackboneName(BackboneId id) {
  switch (id) {
    case BackboneId::kVgg16: return "vgg16";
    case BackboneId::kResNet50: return "resnet50";
    case BackboneId::kInceptionV3: return "inceptionv3";
    case BackboneId::kTinyTestCnn: return "tiny_test_cnn";
  }
  return "?";
}

BackboneId ParseBackboneId(std::string_view name) {
  for (BackboneId id : kAllBackbones) {
    if (BackboneName(id) == name) return id;
  }
  Fail(ErrorCode::kInvalidArgument,
       "unknown backbone '" + std::string(name) +
           "'; expected vgg16, resnet50, inceptionv3 or tiny_test_cnn");
}

template <typename T>
int BuildBackbone(BackboneId id, Network<T>& net, int input) {
  if (net.shape(input).size() != 3 || net.shape(input)[2] != 3) {
    Fail(ErrorCode::kInvalidArgument, "backbones expect an H x W x 3 input");
  }
  Builder<T> b(net);
  switch (id) {
    case BackboneId::kVgg16: return BuildVgg16(b, input);
    case BackboneId::kResNet50: return BuildResNet50(b, input);
    case BackboneId::kInceptionV3: return BuildInceptionV3(b, input);
    case BackboneId::kTinyTestCnn: return BuildTiny(b, input);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown backbone");
}

template <typename T>
void PreprocessImage(BackboneId id, const Image& image, T* out) {
  const auto px = image.bytes();
  const std::size_t n = static_cast<std::size_t>(image.width()) * image.height();
  switch (id) {
    case BackboneId::kTinyTestCnn:
      for (std::size_t i = 0; i < 3 * n; ++i) out[i] = static_cast<T>(px[i] / 255.0);
      return;
    case BackboneId::kInceptionV3:
      for (std::size_t i = 0; i < 3 * n; ++i) out[i] = static_cast<T>(px[i] / 127.5 - 1.0);
      return;
    case BackboneId::kVgg16:
    case BackboneId::kResNet50: {
      constexpr double kMeanBgr[3] = {103.939, 116.779, 123.68};
      for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
          out[3 * i + c] = static_cast<T>(px[3 * i + (2 - c)] - kMeanBgr[c]);
        }
      }
      return;
    }
  }
}

template <typename T>
std::vector<int> WeightedNodes(const Network<T>& net, int last) {
  std::vector<int> out;
  for (int i = 0; i <= last && i < net.size(); ++i) {
    if (!net.node(i).layer->params().empty()) out.push_back(i);
  }
  return out;
}

template <typename T>
void InitializeParameters(Network<T>& net, int first, int last, std::uint64_t seed) {
  for (int i = first; i <= last; ++i) {
    auto& node = net.node(i);
    const std::string_view kind = node.layer->kind();
    if (kind != "conv2d" && kind != "dense") continue;
    for (auto& p : node.layer->params()) {
      if (p.name != "kernel") continue;
      // Kernels are (kh, kw, cin, cout) or (in, out); fan-in is all but the last dim.
      const std::size_t fan_in = p.value.size() / static_cast<std::size_t>(p.shape.back());
      const double limit = kind == "conv2d" ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                            : 1.0 / std::sqrt(static_cast<double>(fan_in));
      Rng rng(DeriveSeed(seed, node.name, p.name));
      for (auto& v : p.value) v = static_cast<T>(rng.Uniform(-limit, limit));
    }
  }
}

#define MPOX_INSTANTIATE_BACKBONES(T)                                          \
  template int BuildBackbone(BackboneId, Network<T>&, int);                    \
  template void PreprocessImage(BackboneId, const Image&, T*);                 \
  template std::vector<int> WeightedNodes(const Network<T>&, int);             \
  template void InitializeParameters(Network<T>&, int, int, std::uint64_t);

MPOX_INSTANTIATE_BACKBONES(float)
MPOX_INSTANTIATE_BACKBONES(double)

#undef MPOX_INSTANTIATE_BACKBONES

}  // namespace mpox::nn
