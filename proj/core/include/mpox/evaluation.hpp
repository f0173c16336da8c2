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


#ifndef MPOX_EVALUATION_HPP_
#define MPOX_EVALUATION_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpox/dataset.hpp"
#include "mpox/model.hpp"

namespace mpox {

/// Counts with Monkeypox as the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

using TruthMap = std::map<std::string, ClassLabel, std::less<>>;

/// Truth labels of the given manifest ids.
TruthMap TruthFromManifest(const DatasetManifest& manifest, std::span<const std::string> ids);

/// Throws kNotFound for a prediction without a truth label and
/// kInvalidArgument for a repeated image id.
ConfusionMatrix ComputeConfusion(const PredictionBatch& predictions, const TruthMap& truth);

struct MetricSet {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

/// 0/0 ratios become 0 and emit a warning; an empty matrix is rejected.
MetricSet ComputeMetrics(const ConfusionMatrix& cm);

/// Unweighted mean of the metrics taken with each class as positive.
/// Accuracy is the same either way.
MetricSet ComputeMacroMetrics(const ConfusionMatrix& cm);

/// Hard vote over exactly three labels.
ClassLabel MajorityVote(std::span<const ClassLabel> votes);

/// Per-image majority vote of three members' predictions, which must list
/// the same images in the same order. Probabilities are vote shares.
PredictionBatch EnsemblePredictions(std::span<const PredictionBatch> members);

struct NetworkSummary {
  std::string network;  // vgg16, resnet50, inceptionv3, ensemble, ...
  std::vector<MetricSet> folds;
  MetricSet mean;
  MetricSet stddev;  // sample standard deviation, divisor n-1
  std::vector<MetricSet> macro_folds;
  MetricSet macro_mean;
  MetricSet macro_stddev;
};

struct EvaluationReport {
  std::vector<NetworkSummary> networks;
};

/// Mean and sample standard deviation across exactly `expected_folds`
/// folds. `macro` may be empty or hold one entry per fold.
NetworkSummary AggregateFolds(std::string network, std::span<const MetricSet> folds,
                              std::span<const MetricSet> macro = {},
                              int expected_folds = 3);

/// "VGG16", "ResNet50", "InceptionV3", "Ensemble"; other ids unchanged.
std::string DisplayName(std::string_view network);

/// "82.96 ± 4.57"
std::string FormatMeanStd(double mean, double stddev, int decimals = 2);

enum class MetricScope { kPositiveClass, kMacro };

/// Text table with columns Network | Accuracy (%) | Precision | Recall |
/// F1 score. Accuracy is shown in percent, the rest as fractions.
std::string FormatReportTable(const EvaluationReport& report,
                              MetricScope scope = MetricScope::kPositiveClass);

/// The positive-class table followed by the macro-averaged one.
std::string FormatReportText(const EvaluationReport& report);

/// Tab-separated records: network, scope, fold (or mean/std), metrics.
std::string FormatReportNumeric(const EvaluationReport& report);

}  // namespace mpox

#endif  // MPOX_EVALUATION_HPP_
