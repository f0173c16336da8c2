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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mpox/codec.hpp"
#include "mpox/diag.hpp"
#include "mpox/error.hpp"
#include "mpox/evaluation.hpp"
#include "mpox/random.hpp"

#ifndef MPOX_TEST_DATA_DIR
#error "MPOX_TEST_DATA_DIR must point at tests/data"
#endif

namespace mpox {
namespace {

constexpr ClassLabel M = ClassLabel::kMonkeypox;
constexpr ClassLabel O = ClassLabel::kOthers;

Prediction Pred(std::string id, ClassLabel label) {
  Prediction p;
  p.image_id = std::move(id);
  p.predicted = label;
  p.probabilities = label == M ? std::array<double, 2>{0.8, 0.2} : std::array<double, 2>{0.3, 0.7};
  return p;
}

struct Labeled {
  PredictionBatch preds;
  TruthMap truth;
};

Labeled TenAndTen(bool invert) {
  Labeled out;
  for (int i = 0; i < 20; ++i) {
    const ClassLabel t = i < 10 ? M : O;
    const std::string id = "img" + std::to_string(i);
    out.truth[id] = t;
    out.preds.push_back(Pred(id, invert ? (t == M ? O : M) : t));
  }
  return out;
}

TEST(ConfusionTest, AllCorrectAndAllInverted) {
  const auto ok = TenAndTen(false);
  EXPECT_EQ(ComputeConfusion(ok.preds, ok.truth), (ConfusionMatrix{10, 0, 0, 10}));
  const auto bad = TenAndTen(true);
  EXPECT_EQ(ComputeConfusion(bad.preds, bad.truth), (ConfusionMatrix{0, 10, 10, 0}));
}

TEST(ConfusionTest, MatchesBruteForceRecount) {
  Rng rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    Labeled l;
    for (int i = 0; i < 50; ++i) {
      const std::string id = "r" + std::to_string(i);
      l.truth[id] = rng.Bernoulli(0.5) ? M : O;
      l.preds.push_back(Pred(id, rng.Bernoulli(0.5) ? M : O));
    }
    std::uint64_t c[2][2] = {};
    for (const auto& p : l.preds) ++c[l.truth.at(p.image_id) == M ? 0 : 1][p.predicted == M ? 0 : 1];
    EXPECT_EQ(ComputeConfusion(l.preds, l.truth), (ConfusionMatrix{c[0][0], c[1][0], c[0][1], c[1][1]}));
  }
}

TEST(ConfusionTest, MissingTruthAndDuplicates) {
  auto l = TenAndTen(false);
  l.truth.erase("img3");
  try {
    ComputeConfusion(l.preds, l.truth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("img3"), std::string::npos);
  }
  auto d = TenAndTen(false);
  d.preds.push_back(d.preds.front());
  try {
    ComputeConfusion(d.preds, d.truth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(MetricsTest, WorkedExample) {
  const auto m = ComputeMetrics({40, 5, 10, 45});
  EXPECT_NEAR(m.accuracy, 0.85, 5e-5);
  EXPECT_NEAR(m.precision, 0.8889, 5e-5);
  EXPECT_NEAR(m.recall, 0.8, 5e-5);
  EXPECT_NEAR(m.f1, 0.8421, 5e-5);
}

TEST(MetricsTest, PerfectAndDegenerate) {
  EXPECT_EQ(ComputeMetrics({7, 0, 0, 3}), (MetricSet{1, 1, 1, 1}));
  ScopedDiagnosticCapture capture;
  const auto m = ComputeMetrics({0, 0, 10, 90});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.9);
  EXPECT_GE(capture.warnings(), 1u);
  EXPECT_THROW(ComputeMetrics({0, 0, 0, 0}), Error);
}

// Every ratio is a quotient of integers, so the correctly rounded double
// of the rational value is the only acceptable answer.
TEST(MetricsTest, RandomMatricesAgainstRationalFormulas) {
  Rng rng(1000);
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix cm{rng.UniformIndex(60), rng.UniformIndex(60), rng.UniformIndex(60),
                       rng.UniformIndex(60)};
    if (cm.total() == 0) cm.tn = 1;
    ScopedDiagnosticCapture quiet;
    const auto m = ComputeMetrics(cm);
    EXPECT_EQ(m.accuracy, static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()));
    const double p = cm.tp + cm.fp ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp) : 0;
    const double r = cm.tp + cm.fn ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : 0;
    EXPECT_EQ(m.precision, p);
    EXPECT_EQ(m.recall, r);
    // F1 = 2tp / (2tp + fp + fn), the harmonic mean in integer form.
    const std::uint64_t den = 2 * cm.tp + cm.fp + cm.fn;
    const double f1 = cm.tp ? static_cast<double>(2 * cm.tp) / static_cast<double>(den) : 0;
    EXPECT_EQ(m.f1, f1);
    if (p + r > 0) {
      EXPECT_NEAR(m.f1, 2 * p * r / (p + r), 1e-12);
    }
    for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(MetricsTest, MacroAveragesBothClasses) {
  const ConfusionMatrix cm{40, 5, 10, 45};
  const auto pos = ComputeMetrics(cm);
  const auto neg = ComputeMetrics({cm.tn, cm.fn, cm.fp, cm.tp});
  const auto macro = ComputeMacroMetrics(cm);
  EXPECT_DOUBLE_EQ(macro.accuracy, pos.accuracy);
  EXPECT_DOUBLE_EQ(macro.precision, (pos.precision + neg.precision) / 2);
  EXPECT_DOUBLE_EQ(macro.recall, (pos.recall + neg.recall) / 2);
  EXPECT_DOUBLE_EQ(macro.f1, (pos.f1 + neg.f1) / 2);
}

TEST(MajorityVoteTest, AllEightCombinationsMatchTheMode) {
  for (int bits = 0; bits < 8; ++bits) {
    const ClassLabel v[3] = {bits & 1 ? O : M, bits & 2 ? O : M, bits & 4 ? O : M};
    const int others = std::count(std::begin(v), std::end(v), O);
    EXPECT_EQ(MajorityVote(v), others >= 2 ? O : M) << bits;
  }
  for (ClassLabel x : {M, O}) {
    for (ClassLabel y : {M, O}) {
      const ClassLabel v[3] = {x, x, y};
      EXPECT_EQ(MajorityVote(v), x);
    }
  }
  const ClassLabel two[2] = {M, O};
  EXPECT_THROW(MajorityVote(two), Error);
  const ClassLabel four[4] = {M, O, M, O};
  EXPECT_THROW(MajorityVote(four), Error);
}

TEST(EnsembleTest, ThreeCopiesReproduceTheMember) {
  const auto l = TenAndTen(false);
  auto member = l.preds;
  member[3].predicted = O;
  const PredictionBatch members[3] = {member, member, member};
  const auto ens = EnsemblePredictions(members);
  ASSERT_EQ(ens.size(), member.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    EXPECT_EQ(ens[i].image_id, member[i].image_id);
    EXPECT_EQ(ens[i].predicted, member[i].predicted);
    EXPECT_NEAR(ens[i].probabilities[0] + ens[i].probabilities[1], 1.0, 1e-12);
  }
}

TEST(EnsembleTest, MisalignedMembersAreRejected) {
  const auto l = TenAndTen(false);
  auto shuffled = l.preds;
  std::swap(shuffled[0], shuffled[1]);
  const PredictionBatch members[3] = {l.preds, shuffled, l.preds};
  EXPECT_THROW(EnsemblePredictions(members), Error);
}

MetricSet Acc(double a) { return {a, 0.5, 0.5, 0.5}; }

TEST(AggregateTest, SampleStandardDeviation) {
  const MetricSet folds[] = {Acc(0.80), Acc(0.85), Acc(0.90)};
  const auto s = AggregateFolds("resnet50", folds);
  EXPECT_NEAR(s.mean.accuracy, 0.85, 1e-12);
  EXPECT_NEAR(s.stddev.accuracy, 0.05, 1e-12);
  EXPECT_EQ(FormatMeanStd(s.mean.accuracy * 100, s.stddev.accuracy * 100), "85.00 ± 5.00");
  const MetricSet same[] = {Acc(0.7), Acc(0.7), Acc(0.7)};
  const auto flat = AggregateFolds("x", same);
  EXPECT_NEAR(flat.stddev.accuracy, 0.0, 1e-15);
  EXPECT_EQ(FormatMeanStd(flat.mean.accuracy * 100, flat.stddev.accuracy * 100), "70.00 ± 0.00");
}

TEST(AggregateTest, RequiresEveryFold) {
  const MetricSet two[] = {Acc(0.8), Acc(0.9)};
  try {
    AggregateFolds("vgg16", two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("vgg16"), std::string::npos);
  }
}

TEST(AggregateTest, MeanIsPermutationInvariantAndBounded) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    MetricSet f[3];
    for (auto& m : f) m = {rng.Uniform01(), rng.Uniform01(), rng.Uniform01(), rng.Uniform01()};
    const auto a = AggregateFolds("n", f);
    std::swap(f[0], f[2]);
    const auto b = AggregateFolds("n", f);
    EXPECT_NEAR(a.mean.accuracy, b.mean.accuracy, 1e-15);
    EXPECT_NEAR(a.stddev.f1, b.stddev.f1, 1e-15);
    const auto [lo, hi] = std::minmax({f[0].recall, f[1].recall, f[2].recall});
    EXPECT_GE(a.mean.recall, lo);
    EXPECT_LE(a.mean.recall, hi);
  }
}

TEST(FormatTest, MeanStdRendering) {
  EXPECT_EQ(FormatMeanStd(82.96, 4.57), "82.96 ± 4.57");
  EXPECT_EQ(FormatMeanStd(0.8, 0.0), "0.80 ± 0.00");
  EXPECT_EQ(DisplayName("resnet50"), "ResNet50");
  EXPECT_EQ(DisplayName("tiny_a"), "tiny_a");
}

NetworkSummary Row(std::string name, std::array<double, 4> mean, std::array<double, 4> sd) {
  NetworkSummary s;
  s.network = std::move(name);
  s.mean = {mean[0] / 100, mean[1], mean[2], mean[3]};
  s.stddev = {sd[0] / 100, sd[1], sd[2], sd[3]};
  return s;
}

TEST(FormatTest, TableLayoutMatchesGolden) {
  EvaluationReport r;
  r.networks = {Row("vgg16", {81.48, 0.85, 0.81, 0.83}, {6.87, 0.08, 0.05, 0.06}),
                Row("resnet50", {82.96, 0.87, 0.83, 0.84}, {4.57, 0.07, 0.02, 0.03}),
                Row("inceptionv3", {74.07, 0.74, 0.81, 0.78}, {3.78, 0.02, 0.07, 0.04}),
                Row("ensemble", {79.26, 0.84, 0.79, 0.81}, {1.05, 0.05, 0.07, 0.02})};
  const std::string golden =
      ReadTextFile(std::filesystem::path(MPOX_TEST_DATA_DIR) / "table2_layout.txt");
  EXPECT_EQ(FormatReportTable(r), golden);
}

TEST(FormatTest, NumericReportHasEveryFoldAndSummary) {
  const MetricSet folds[] = {Acc(0.8), Acc(0.85), Acc(0.9)};
  EvaluationReport r;
  r.networks.push_back(AggregateFolds("vgg16", folds, folds));
  const std::string text = FormatReportNumeric(r);
  std::istringstream in(text);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 6) << line;
  }
  EXPECT_EQ(rows, 10);  // (3 folds + mean + std) x 2 scopes
  EXPECT_NE(text.find("vgg16\tpositive\tmean\t0.85"), std::string::npos) << text;
}

}  // namespace
}  // namespace mpox
