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


#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <memory>

#include "mpox/error.hpp"
#include "mpox/nn/backbones.hpp"
#include "mpox/nn/layers.hpp"
#include "mpox/nn/loss.hpp"
#include "mpox/nn/network.hpp"
#include "mpox/nn/optimizer.hpp"
#include "mpox/nn/weights_io.hpp"
#include "mpox/random.hpp"

namespace mpox::nn {
namespace {

using D = double;

void FillUniform(std::vector<D>& v, Rng& rng, double lo = -1, double hi = 1) {
  for (auto& x : v) x = rng.Uniform(lo, hi);
}

double RelErr(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4}); }

struct LayerCase {
  std::string label;
  std::function<std::unique_ptr<Layer<D>>()> make;
  std::vector<Shape> inputs;
  int batch = 2;
  bool trainable = true;
};

/// Compares Backward against central differences of L = sum(out * w) for
/// every input and parameter element.
void CheckLayerGradients(const LayerCase& c) {
  SCOPED_TRACE(c.label);
  Rng rng(1234);
  auto layer = c.make();
  for (auto& p : layer->params()) {
    FillUniform(p.value, rng, -0.5, 0.5);
    if (p.name == "moving_variance") FillUniform(p.value, rng, 0.5, 1.5);
  }
  std::vector<Tensor<D>> inputs;
  for (const auto& s : c.inputs) {
    inputs.emplace_back(c.batch, s);
    FillUniform(inputs.back().data, rng);
  }
  std::vector<const Tensor<D>*> in;
  for (auto& t : inputs) in.push_back(&t);

  const std::uint64_t dropout_seed = 77;
  auto forward = [&](NodeCache<D>* cache) {
    Rng r(dropout_seed);
    RunContext<D> ctx{true, c.trainable, &r, cache};
    Tensor<D> out;
    layer->Forward(in, out, ctx);
    return out;
  };
  NodeCache<D> cache;
  const Tensor<D> out = forward(&cache);
  Tensor<D> w(out.batch, out.sample_shape);
  FillUniform(w.data, rng);
  auto loss = [&] {
    NodeCache<D> scratch;
    const Tensor<D> o = forward(&scratch);
    double s = 0;
    for (std::size_t i = 0; i < o.data.size(); ++i) s += o.data[i] * w.data[i];
    return s;
  };

  std::vector<Tensor<D>> grad_in;
  for (const auto& t : inputs) grad_in.emplace_back(t.batch, t.sample_shape);
  std::vector<Tensor<D>*> gin;
  for (auto& g : grad_in) gin.push_back(&g);
  for (auto& p : layer->params()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
  Rng r(dropout_seed);
  RunContext<D> ctx{true, c.trainable, &r, &cache};
  layer->Backward(in, out, w, gin, c.trainable, ctx);

  const double h = 1e-6;
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].data.size(); ++i) {
      const double keep = inputs[k].data[i];
      inputs[k].data[i] = keep + h;
      const double up = loss();
      inputs[k].data[i] = keep - h;
      const double down = loss();
      inputs[k].data[i] = keep;
      worst = std::max(worst, RelErr(grad_in[k].data[i], (up - down) / (2 * h)));
    }
  }
  if (c.trainable) {
    for (auto& p : layer->params()) {
      if (!p.optimizable) continue;
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double keep = p.value[i];
        p.value[i] = keep + h;
        const double up = loss();
        p.value[i] = keep - h;
        const double down = loss();
        p.value[i] = keep;
        worst = std::max(worst, RelErr(p.grad[i], (up - down) / (2 * h)));
      }
    }
  }
  EXPECT_LT(worst, 1e-5);
}

Conv2DOptions ConvOpt(int filters, int k, int stride, PadMode mode) {
  Conv2DOptions o;
  o.filters = filters;
  o.kernel_h = o.kernel_w = k;
  o.stride_h = o.stride_w = stride;
  o.mode = mode;
  return o;
}

TEST(LayerGradientTest, Conv2D) {
  CheckLayerGradients({"same 3x3", [] { return std::make_unique<Conv2D<D>>(3, ConvOpt(4, 3, 1, PadMode::kSame)); },
                       {{6, 5, 3}}});
  CheckLayerGradients({"valid stride 2", [] { return std::make_unique<Conv2D<D>>(2, ConvOpt(3, 3, 2, PadMode::kValid)); },
                       {{7, 7, 2}}});
  CheckLayerGradients({"same stride 2 rect", [] {
                         auto o = ConvOpt(2, 3, 2, PadMode::kSame);
                         o.kernel_w = 1;
                         return std::make_unique<Conv2D<D>>(3, o);
                       },
                       {{6, 5, 3}}});
  CheckLayerGradients({"1x1", [] { return std::make_unique<Conv2D<D>>(4, ConvOpt(3, 1, 1, PadMode::kSame)); },
                       {{3, 3, 4}}});
  CheckLayerGradients({"explicit pad, no bias", [] {
                         auto o = ConvOpt(2, 3, 2, PadMode::kValid);
                         o.explicit_padding = true;
                         o.padding = {1, 2, 0, 1};
                         o.use_bias = false;
                         return std::make_unique<Conv2D<D>>(2, o);
                       },
                       {{5, 6, 2}}});
}

TEST(LayerGradientTest, BatchNorm) {
  CheckLayerGradients({"batch statistics", [] { return std::make_unique<BatchNorm<D>>(3, 1e-3); },
                       {{2, 3, 3}}, 3, true});
  CheckLayerGradients({"no scale", [] { return std::make_unique<BatchNorm<D>>(2, 1e-3, false); },
                       {{3, 2, 2}}, 2, true});
  CheckLayerGradients({"frozen uses moving statistics", [] { return std::make_unique<BatchNorm<D>>(3, 1e-3); },
                       {{2, 2, 3}}, 2, false});
}

TEST(LayerGradientTest, PoolingAndElementwise) {
  CheckLayerGradients({"max", [] { return std::make_unique<Pool2D<D>>(Pool2DOptions{}); }, {{4, 6, 2}}});
  CheckLayerGradients({"max 3/2 same", [] {
                         return std::make_unique<Pool2D<D>>(
                             Pool2DOptions{PoolKind::kMax, 3, 2, PadMode::kSame, false, {}});
                       },
                       {{5, 5, 2}}});
  CheckLayerGradients({"avg 3/1 same", [] {
                         return std::make_unique<Pool2D<D>>(
                             Pool2DOptions{PoolKind::kAverage, 3, 1, PadMode::kSame, false, {}});
                       },
                       {{4, 3, 2}}});
  CheckLayerGradients({"relu", [] { return std::make_unique<Relu<D>>(); }, {{3, 4, 2}}});
  CheckLayerGradients({"add", [] { return std::make_unique<Add<D>>(); }, {{2, 3, 2}, {2, 3, 2}}});
  CheckLayerGradients({"concat", [] { return std::make_unique<Concat<D>>(); }, {{2, 2, 1}, {2, 2, 3}}});
  CheckLayerGradients({"flatten", [] { return std::make_unique<Flatten<D>>(); }, {{2, 2, 3}}});
  CheckLayerGradients({"dense", [] { return std::make_unique<Dense<D>>(5, 3); }, {{5}}, 4});
  CheckLayerGradients({"dropout", [] { return std::make_unique<Dropout<D>>(0.4); }, {{12}}, 3});
}

TEST(LayerTest, SamePaddingMatchesTensorFlow) {
  const auto p = ComputePadding(PadMode::kSame, 224, 224, 7, 7, 2, 2);
  EXPECT_EQ(p.top, 2);
  EXPECT_EQ(p.bottom, 3);
  const auto q = ComputePadding(PadMode::kSame, 5, 5, 3, 3, 1, 1);
  EXPECT_EQ(q.top, 1);
  EXPECT_EQ(q.bottom, 1);
  const auto v = ComputePadding(PadMode::kValid, 5, 5, 3, 3, 1, 1);
  EXPECT_EQ(v.top + v.bottom + v.left + v.right, 0);
}

TEST(LayerTest, DropoutIsIdentityAtInference) {
  Dropout<D> d(0.5);
  Tensor<D> x(2, {8});
  Rng rng(1);
  FillUniform(x.data, rng);
  Tensor<D> out;
  const Tensor<D>* in[] = {&x};
  d.Forward(in, out, RunContext<D>{});
  EXPECT_EQ(out.data, x.data);
}

TEST(LayerTest, AveragePoolExcludesPadding) {
  Pool2D<D> pool(Pool2DOptions{PoolKind::kAverage, 3, 1, PadMode::kSame, false, {}});
  Tensor<D> x(1, {2, 2, 1}, 1.0);
  Tensor<D> out;
  const Tensor<D>* in[] = {&x};
  pool.Forward(in, out, RunContext<D>{});
  for (double v : out.data) EXPECT_DOUBLE_EQ(v, 1.0);
}

// A whole network's parameter gradients against finite differences of
// the cross-entropy loss, with batch-norm in training mode.
TEST(NetworkGradientTest, SmallConvNet) {
  Network<D> net({6, 6, 2});
  int x = net.Emplace<Conv2D<D>>("c1", {kNetworkInput}, 2, ConvOpt(3, 3, 1, PadMode::kSame));
  x = net.Emplace<BatchNorm<D>>("bn", {x}, 3, 1e-3);
  x = net.Emplace<Relu<D>>("r", {x});
  x = net.Emplace<Pool2D<D>>("p", {x}, Pool2DOptions{});
  x = net.Emplace<Flatten<D>>("f", {x});
  x = net.Emplace<Dense<D>>("d", {x}, 27, 2);
  Rng rng(9);
  for (auto* p : net.AllParameters()) FillUniform(p->value, rng, -0.4, 0.4);
  net.node(1).layer->params()[3].value.assign(3, 1.0);  // moving variance
  Tensor<D> input(3, {6, 6, 2});
  FillUniform(input.data, rng);
  const int labels[] = {0, 1, 1};

  auto loss_of = [&] {
    Rng r(1);
    typename Network<D>::TrainingPass pass;
    return SoftmaxCrossEntropy(net.ForwardTrain(input, r, pass), std::span<const int>(labels));
  };
  Rng r(1);
  typename Network<D>::TrainingPass pass;
  Tensor<D> grad;
  SoftmaxCrossEntropy(net.ForwardTrain(input, r, pass), std::span<const int>(labels), &grad);
  net.ZeroGrad();
  net.Backward(input, pass, grad);

  const double h = 1e-6;
  double worst = 0;
  for (auto* p : net.TrainableParameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      const double up = loss_of();
      p->value[i] = keep - h;
      const double down = loss_of();
      p->value[i] = keep;
      worst = std::max(worst, RelErr(p->grad[i], (up - down) / (2 * h)));
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(NetworkTest, FrozenPrefixIsSkippedAndUntouched) {
  Network<D> net({4, 4, 1});
  int x = net.Emplace<Conv2D<D>>("c1", {kNetworkInput}, 1, ConvOpt(2, 3, 1, PadMode::kSame));
  x = net.Emplace<Flatten<D>>("f", {x});
  x = net.Emplace<Dense<D>>("d", {x}, 32, 2);
  net.node(0).trainable = false;
  Rng rng(2);
  for (auto* p : net.AllParameters()) FillUniform(p->value, rng);
  Tensor<D> in(2, {4, 4, 1});
  FillUniform(in.data, rng);
  const int labels[] = {0, 1};
  typename Network<D>::TrainingPass pass;
  Tensor<D> grad;
  SoftmaxCrossEntropy(net.ForwardTrain(in, rng, pass), std::span<const int>(labels), &grad);
  net.Backward(in, pass, grad);
  for (const auto& p : net.node(0).layer->params()) {
    for (double g : p.grad) EXPECT_EQ(g, 0.0);
  }
  EXPECT_EQ(net.TrainableParameters().size(), 2u);
  EXPECT_EQ(net.TrainableParameterCount(), 32u * 2 + 2);
}

TEST(LossTest, SoftmaxRowsAndKnownLosses) {
  Tensor<D> logits(3, {2});
  logits.data = {0.0, 0.0, 30.0, -30.0, -2.0, 5.0};
  const auto p = Softmax(logits);
  for (int n = 0; n < 3; ++n) EXPECT_NEAR(p.sample(n)[0] + p.sample(n)[1], 1.0, 1e-12);
  const int uniform[] = {0};
  Tensor<D> one(1, {2});
  EXPECT_NEAR(SoftmaxCrossEntropy(one, std::span<const int>(uniform)), std::log(2.0), 1e-12);
  Tensor<D> confident(1, {2});
  confident.data = {40.0, -40.0};
  EXPECT_LT(SoftmaxCrossEntropy(confident, std::span<const int>(uniform)), 1e-12);

  const int labels[] = {1, 0, 1};
  Tensor<D> grad;
  SoftmaxCrossEntropy(logits, std::span<const int>(labels), &grad);
  for (int n = 0; n < 3; ++n) {
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(grad.sample(n)[k], (p.sample(n)[k] - (labels[n] == k ? 1.0 : 0.0)) / 3.0, 1e-12);
    }
  }
}

TEST(AdamTest, MatchesKerasUpdateRule) {
  Parameter<D> p;
  p.value = {0.5, -1.0};
  p.grad = {0.2, -0.05};
  AdamOptions opt;
  opt.learning_rate = 1e-3;
  Adam<D> adam(opt);
  double m[2] = {0, 0}, v[2] = {0, 0}, w[2] = {0.5, -1.0};
  Parameter<D>* params[] = {&p};
  for (int t = 1; t <= 3; ++t) {
    adam.Step(params);
    const double lr_t = 1e-3 * std::sqrt(1 - std::pow(0.999, t)) / (1 - std::pow(0.9, t));
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * p.grad[i];
      v[i] = 0.999 * v[i] + 0.001 * p.grad[i] * p.grad[i];
      w[i] -= lr_t * m[i] / (std::sqrt(v[i]) + 1e-7);
      EXPECT_NEAR(p.value[i], w[i], 1e-12);
    }
  }
  EXPECT_EQ(adam.iterations(), 3);
}

TEST(WeightsIoTest, RoundTripAndStrictImport) {
  Network<float> net({32, 32, 3});
  const int last = BuildBackbone<float>(BackboneId::kTinyTestCnn, net);
  InitializeParameters<float>(net, 0, last, 5);
  const auto tensors = ExportParameters(net);
  const auto blob = EncodeWeights(tensors);
  ASSERT_EQ(std::string(blob.begin(), blob.begin() + 4), "MPXW");
  const auto back = DecodeWeights(blob);
  ASSERT_EQ(back.size(), tensors.size());

  Network<float> other({32, 32, 3});
  BuildBackbone<float>(BackboneId::kTinyTestCnn, other);
  EXPECT_EQ(ImportParameters(other, back), tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    EXPECT_EQ(other.AllParameters()[i]->value, net.AllParameters()[i]->value);
  }

  auto renamed = back;
  renamed[0].name = "ghost/kernel";
  try {
    ImportParameters(other, renamed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDataLoss);
  }
  auto reshaped = back;
  reshaped[0].shape.back() += 1;
  EXPECT_THROW(ImportParameters(other, reshaped), Error);
  auto truncated = blob;
  truncated.resize(blob.size() - 3);
  EXPECT_THROW(DecodeWeights(truncated), Error);
}

// Reference counts are the Keras application totals (no top, including
// batch-norm moving statistics).
TEST(BackboneTest, KerasParameterCountsAndShapes) {
  struct Case {
    BackboneId id;
    std::size_t params;
    Shape out;
  } cases[] = {
      {BackboneId::kVgg16, 14'714'688, {7, 7, 512}},
      {BackboneId::kResNet50, 23'587'712, {7, 7, 2048}},
      {BackboneId::kInceptionV3, 21'802'784, {5, 5, 2048}},
      {BackboneId::kTinyTestCnn, 0, {7, 7, 32}},
  };
  for (const auto& c : cases) {
    SCOPED_TRACE(std::string(BackboneName(c.id)));
    Network<float> net({224, 224, 3});
    const int last = BuildBackbone<float>(c.id, net);
    EXPECT_EQ(net.shape(last), c.out);
    if (c.params > 0) {
      EXPECT_EQ(net.ParameterCount(), c.params);
    }
  }
}

TEST(BackboneTest, NamesParseAndUnknownIsRejected) {
  for (BackboneId id : kAllBackbones) EXPECT_EQ(ParseBackboneId(BackboneName(id)), id);
  EXPECT_EQ(BackboneName(BackboneId::kTinyTestCnn), "tiny_test_cnn");
  try {
    ParseBackboneId("alexnet");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("resnet50"), std::string::npos);
  }
}

TEST(BackboneTest, InitializationIsSeededAndScaled) {
  Network<float> a({32, 32, 3}), b({32, 32, 3}), c({32, 32, 3});
  const int last = BuildBackbone<float>(BackboneId::kTinyTestCnn, a);
  BuildBackbone<float>(BackboneId::kTinyTestCnn, b);
  BuildBackbone<float>(BackboneId::kTinyTestCnn, c);
  InitializeParameters<float>(a, 0, last, 1);
  InitializeParameters<float>(b, 0, last, 1);
  InitializeParameters<float>(c, 0, last, 2);
  EXPECT_EQ(a.AllParameters()[0]->value, b.AllParameters()[0]->value);
  EXPECT_NE(a.AllParameters()[0]->value, c.AllParameters()[0]->value);
  const auto* k = a.AllParameters()[0];
  const double fan_in = k->shape[0] * k->shape[1] * k->shape[2];
  const double limit = std::sqrt(6.0 / fan_in);
  for (float v : k->value) EXPECT_LE(std::abs(v), limit);
}

TEST(PreprocessTest, DocumentedScalings) {
  Image img(1, 1);
  img.at(0, 0, 0) = 255;
  img.at(0, 0, 1) = 0;
  img.at(0, 0, 2) = 51;
  float out[3];
  PreprocessImage<float>(BackboneId::kTinyTestCnn, img, out);
  EXPECT_FLOAT_EQ(out[0], 1.0f);
  EXPECT_FLOAT_EQ(out[2], 0.2f);
  PreprocessImage<float>(BackboneId::kInceptionV3, img, out);
  EXPECT_FLOAT_EQ(out[0], 1.0f);
  EXPECT_FLOAT_EQ(out[1], -1.0f);
  PreprocessImage<float>(BackboneId::kResNet50, img, out);  // BGR, mean-centred
  EXPECT_NEAR(out[0], 51 - 103.939, 1e-4);
  EXPECT_NEAR(out[1], 0 - 116.779, 1e-4);
  EXPECT_NEAR(out[2], 255 - 123.68, 1e-4);
}

}  // namespace
}  // namespace mpox::nn
