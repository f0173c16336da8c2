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


#include "mpox/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "mpox/diag.hpp"
#include "mpox/error.hpp"
#include "mpox/kv_config.hpp"

namespace mpox {
namespace {

double Ratio(std::uint64_t num, std::uint64_t den, std::string_view what) {
  if (den == 0) {
    Warn("metrics", std::string(what) + " is 0/0; reported as 0");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

/// Harmonic mean of precision and recall in integer form, so the result
/// is the correctly rounded ratio.
double F1(const ConfusionMatrix& cm) {
  if (cm.tp == 0) {
    Warn("metrics", "f1 is 0/0; reported as 0");
    return 0.0;
  }
  return static_cast<double>(2 * cm.tp) / static_cast<double>(2 * cm.tp + cm.fp + cm.fn);
}

double Field(const MetricSet& m, int k) {
  switch (k) {
    case 0: return m.accuracy;
    case 1: return m.precision;
    case 2: return m.recall;
    default: return m.f1;
  }
}

void SetField(MetricSet& m, int k, double v) {
  switch (k) {
    case 0: m.accuracy = v; break;
    case 1: m.precision = v; break;
    case 2: m.recall = v; break;
    default: m.f1 = v; break;
  }
}

void MeanStd(std::span<const MetricSet> folds, MetricSet& mean, MetricSet& sd) {
  const double n = static_cast<double>(folds.size());
  for (int k = 0; k < 4; ++k) {
    double sum = 0.0;
    for (const auto& f : folds) sum += Field(f, k);
    const double mu = sum / n;
    double ss = 0.0;
    for (const auto& f : folds) ss += (Field(f, k) - mu) * (Field(f, k) - mu);
    SetField(mean, k, mu);
    SetField(sd, k, folds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
  }
}

std::size_t CodePoints(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

std::string PadRight(std::string s, std::size_t width) {
  const std::size_t len = CodePoints(s);
  if (len < width) s.append(width - len, ' ');
  return s;
}

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  // Avoid "-0.00" for tiny negative rounding noise.
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

}  // namespace

TruthMap TruthFromManifest(const DatasetManifest& manifest, std::span<const std::string> ids) {
  TruthMap truth;
  for (const auto& id : ids) truth[id] = manifest.Get(id).meta.label;
  return truth;
}

ConfusionMatrix ComputeConfusion(const PredictionBatch& predictions, const TruthMap& truth) {
  ConfusionMatrix cm;
  std::set<std::string_view> seen;
  for (const auto& p : predictions) {
    if (!seen.insert(p.image_id).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate prediction for image '" + p.image_id + "'");
    }
    auto it = truth.find(p.image_id);
    if (it == truth.end()) {
      Fail(ErrorCode::kNotFound, "no truth label for image '" + p.image_id + "'");
    }
    const bool actual_pos = it->second == ClassLabel::kMonkeypox;
    const bool pred_pos = p.predicted == ClassLabel::kMonkeypox;
    if (pred_pos && actual_pos) ++cm.tp;
    else if (pred_pos) ++cm.fp;
    else if (actual_pos) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

MetricSet ComputeMetrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) Fail(ErrorCode::kInvalidArgument, "confusion matrix is empty");
  MetricSet m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.precision = Ratio(cm.tp, cm.tp + cm.fp, "precision");
  m.recall = Ratio(cm.tp, cm.tp + cm.fn, "recall");
  m.f1 = F1(cm);
  return m;
}

MetricSet ComputeMacroMetrics(const ConfusionMatrix& cm) {
  const MetricSet pos = ComputeMetrics(cm);
  const MetricSet neg = ComputeMetrics({cm.tn, cm.fn, cm.fp, cm.tp});
  return {pos.accuracy, (pos.precision + neg.precision) / 2.0, (pos.recall + neg.recall) / 2.0,
          (pos.f1 + neg.f1) / 2.0};
}

ClassLabel MajorityVote(std::span<const ClassLabel> votes) {
  if (votes.size() != 3) {
    Fail(ErrorCode::kInvalidArgument,
         "majority vote needs exactly 3 votes, got " + std::to_string(votes.size()));
  }
  const auto pos = std::count(votes.begin(), votes.end(), ClassLabel::kMonkeypox);
  return pos >= 2 ? ClassLabel::kMonkeypox : ClassLabel::kOthers;
}

PredictionBatch EnsemblePredictions(std::span<const PredictionBatch> members) {
  if (members.size() != 3) {
    Fail(ErrorCode::kInvalidArgument,
         "ensemble needs exactly 3 members, got " + std::to_string(members.size()));
  }
  const std::size_t n = members[0].size();
  for (const auto& m : members) {
    if (m.size() != n) Fail(ErrorCode::kInvalidArgument, "ensemble members disagree on image count");
  }
  PredictionBatch out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ClassLabel votes[3];
    for (std::size_t k = 0; k < 3; ++k) {
      if (members[k][i].image_id != members[0][i].image_id) {
        Fail(ErrorCode::kInvalidArgument, "ensemble members disagree at image '" +
                                              members[0][i].image_id + "'");
      }
      votes[k] = members[k][i].predicted;
    }
    const double pos = static_cast<double>(std::count(votes, votes + 3, ClassLabel::kMonkeypox));
    out.push_back({members[0][i].image_id, {pos / 3.0, 1.0 - pos / 3.0}, MajorityVote(votes)});
  }
  return out;
}

NetworkSummary AggregateFolds(std::string network, std::span<const MetricSet> folds,
                              std::span<const MetricSet> macro, int expected_folds) {
  if (folds.size() != static_cast<std::size_t>(expected_folds)) {
    Fail(ErrorCode::kInvalidArgument,
         network + ": expected " + std::to_string(expected_folds) + " folds, got " +
             std::to_string(folds.size()));
  }
  if (!macro.empty() && macro.size() != folds.size()) {
    Fail(ErrorCode::kInvalidArgument, network + ": macro metrics missing for some folds");
  }
  NetworkSummary s;
  s.network = std::move(network);
  s.folds.assign(folds.begin(), folds.end());
  MeanStd(folds, s.mean, s.stddev);
  if (!macro.empty()) {
    s.macro_folds.assign(macro.begin(), macro.end());
    MeanStd(macro, s.macro_mean, s.macro_stddev);
  }
  return s;
}

std::string DisplayName(std::string_view network) {
  if (network == "vgg16") return "VGG16";
  if (network == "resnet50") return "ResNet50";
  if (network == "inceptionv3") return "InceptionV3";
  if (network == "ensemble") return "Ensemble";
  return std::string(network);
}

std::string FormatMeanStd(double mean, double stddev, int decimals) {
  return Fixed(mean, decimals) + " ± " + Fixed(stddev, decimals);
}

std::string FormatReportTable(const EvaluationReport& report, MetricScope scope) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Network", "Accuracy (%)", "Precision", "Recall", "F1 score"});
  for (const auto& n : report.networks) {
    const bool macro = scope == MetricScope::kMacro;
    const MetricSet& mu = macro ? n.macro_mean : n.mean;
    const MetricSet& sd = macro ? n.macro_stddev : n.stddev;
    rows.push_back({DisplayName(n.network), FormatMeanStd(100.0 * mu.accuracy, 100.0 * sd.accuracy),
                    FormatMeanStd(mu.precision, sd.precision), FormatMeanStd(mu.recall, sd.recall),
                    FormatMeanStd(mu.f1, sd.f1)});
  }
  std::vector<std::size_t> width(5, 0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], CodePoints(r[c]));
  }
  auto render = [&](const std::vector<std::string>& r) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) line += " | ";
      line += c + 1 < r.size() ? PadRight(r[c], width[c]) : r[c];
    }
    return line + "\n";
  };
  std::string out = render(rows[0]);
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c) out += "-+-";
    out.append(width[c], '-');
  }
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) out += render(rows[i]);
  return out;
}

std::string FormatReportText(const EvaluationReport& report) {
  std::string out = "Positive class: Monkeypox. Mean ± sample standard deviation over folds.\n\n";
  out += FormatReportTable(report, MetricScope::kPositiveClass);
  const bool has_macro = std::all_of(report.networks.begin(), report.networks.end(),
                                     [](const NetworkSummary& n) { return !n.macro_folds.empty(); });
  if (has_macro && !report.networks.empty()) {
    out += "\nMacro-averaged over both classes.\n\n";
    out += FormatReportTable(report, MetricScope::kMacro);
  }
  return out;
}

std::string FormatReportNumeric(const EvaluationReport& report) {
  std::string out = "# network\tscope\tfold\taccuracy\tprecision\trecall\tf1\n";
  auto row = [&](const std::string& net, const char* scope, const std::string& fold,
                 const MetricSet& m) {
    out += net + "\t" + scope + "\t" + fold + "\t" + FormatDouble(m.accuracy) + "\t" +
           FormatDouble(m.precision) + "\t" + FormatDouble(m.recall) + "\t" + FormatDouble(m.f1) +
           "\n";
  };
  for (const auto& n : report.networks) {
    for (std::size_t f = 0; f < n.folds.size(); ++f) row(n.network, "positive", std::to_string(f), n.folds[f]);
    row(n.network, "positive", "mean", n.mean);
    row(n.network, "positive", "std", n.stddev);
    if (n.macro_folds.empty()) continue;
    for (std::size_t f = 0; f < n.macro_folds.size(); ++f) row(n.network, "macro", std::to_string(f), n.macro_folds[f]);
    row(n.network, "macro", "mean", n.macro_mean);
    row(n.network, "macro", "std", n.macro_stddev);
  }
  return out;
}

}  // namespace mpox
