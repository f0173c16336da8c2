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


#include <benchmark/benchmark.h>

#include <string>

#include "mpox/augmentation.hpp"
#include "mpox/evaluation.hpp"
#include "mpox/model.hpp"
#include "mpox/partitioning.hpp"

namespace mpox {
namespace {

LesionImage Gradient() {
  LesionImage img;
  img.meta.image_id = "bench";
  img.meta.patient_id = "p";
  img.pixels = Image(kImageSide, kImageSide);
  for (int y = 0; y < kImageSide; ++y)
    for (int x = 0; x < kImageSide; ++x)
      for (int c = 0; c < 3; ++c) img.pixels.at(x, y, c) = static_cast<std::uint8_t>((x + 2 * y + 40 * c) & 255);
  return img;
}

void BM_Transform(benchmark::State& state) {
  const auto kind = kAllTransformKinds[static_cast<std::size_t>(state.range(0))];
  const LesionImage img = Gradient();
  const AugmentationSpec spec;
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(ApplyTransform(img, kind, spec, seed++));
  state.SetLabel(std::string(TransformName(kind)));
}
BENCHMARK(BM_Transform)->DenseRange(0, 12);

void BM_IngestResize(benchmark::State& state) {
  const Image raw(640, 480, 90);
  IngestMeta meta{"raw", "p", ClassLabel::kOthers, ""};
  for (auto _ : state) benchmark::DoNotOptimize(IngestImage(raw, {40, 30, 500, 400}, meta));
}
BENCHMARK(BM_IngestResize);

void BM_TinyInference(benchmark::State& state) {
  const Classifier model = Classifier::Build(ModelConfig::TinyPreset(1));
  std::vector<LesionImage> batch(static_cast<std::size_t>(state.range(0)), Gradient());
  std::vector<const LesionImage*> ptrs;
  for (const auto& b : batch) ptrs.push_back(&b);
  const auto input = model.MakeInput(ptrs);
  for (auto _ : state) benchmark::DoNotOptimize(model.Probabilities(input));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TinyInference)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_MakeFolds(benchmark::State& state) {
  DatasetManifest m("/nonexistent");
  const int patients = static_cast<int>(state.range(0));
  for (int p = 0; p < patients; ++p) {
    for (int i = 0; i < 1 + p % 4; ++i) {
      ManifestEntry e;
      e.meta.patient_id = "p" + std::to_string(p);
      e.meta.image_id = e.meta.patient_id + "_i" + std::to_string(i);
      e.meta.label = p % 2 ? ClassLabel::kOthers : ClassLabel::kMonkeypox;
      e.relative_path = e.meta.image_id + ".png";
      m.Add(std::move(e));
    }
  }
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(MakeFolds(m, seed++));
}
BENCHMARK(BM_MakeFolds)->Arg(162)->Arg(2000);

void BM_ComputeMetrics(benchmark::State& state) {
  std::uint64_t k = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeMetrics({k, k % 7, k % 5, 100}));
    ++k;
  }
}
BENCHMARK(BM_ComputeMetrics);

}  // namespace
}  // namespace mpox

BENCHMARK_MAIN();
