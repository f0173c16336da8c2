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


#ifndef MPOX_TOOLS_PIPELINE_HPP_
#define MPOX_TOOLS_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpox/evaluation.hpp"
#include "mpox/model.hpp"
#include "mpox/partitioning.hpp"

namespace mpox::pipeline {

enum class Stage { kIngest, kDedup, kAugment, kSplit, kTrain, kEvaluate, kReport, kServe };

std::string_view StageName(Stage stage);
std::optional<Stage> ParseStage(std::string_view name);

/// Stages executed by `run all`, in order. Serving is left to `serve`.
inline constexpr Stage kRunAllStages[] = {Stage::kIngest, Stage::kDedup, Stage::kAugment,
                                          Stage::kSplit,  Stage::kTrain, Stage::kEvaluate,
                                          Stage::kReport};

/// Workspace layout. Every stage owns one subdirectory and rewrites it.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path StageDir(Stage stage) const { return root / StageName(stage); }
  std::filesystem::path IngestManifest() const { return StageDir(Stage::kIngest) / "manifest.tsv"; }
  std::filesystem::path DedupReport() const { return StageDir(Stage::kDedup) / "duplicates.txt"; }
  std::filesystem::path AugmentSpec() const { return StageDir(Stage::kAugment) / "spec.cfg"; }
  std::filesystem::path AugmentManifest() const { return StageDir(Stage::kAugment) / "manifest.tsv"; }
  std::filesystem::path FoldPlanPath() const { return StageDir(Stage::kSplit) / "plan.tsv"; }
  std::filesystem::path AuditPath() const { return StageDir(Stage::kSplit) / "audit.txt"; }
  std::filesystem::path TrainDir() const { return StageDir(Stage::kTrain); }
  std::filesystem::path RunDir(std::string_view name, int fold) const;
  std::filesystem::path EvaluateDir() const { return StageDir(Stage::kEvaluate); }
  std::filesystem::path ReportText() const { return StageDir(Stage::kReport) / "report.txt"; }
  std::filesystem::path ReportNumeric() const { return StageDir(Stage::kReport) / "report.tsv"; }
};

struct PipelineConfig {
  Workspace workspace;
  std::uint64_t seed = 0;
  /// Ingest input: TSV of image_id, patient_id, label, path, roi, note.
  std::filesystem::path sources;
  int dedup_threshold = 4;
  /// Optional augmentation spec; defaults use a seed derived from `seed`.
  std::filesystem::path augment_spec;
  int folds = kDefaultFolds;
  /// Model config files; the run name is the file stem. Empty selects
  /// three tiny_test_cnn members with different seeds.
  std::vector<std::filesystem::path> model_configs;
  int jobs = 1;

  /// Overlays keys from a pipeline config file: sources, dedup_threshold,
  /// augment_spec, folds, model_configs, jobs, seed. Relative paths are
  /// resolved against the file's directory.
  void ApplyFile(const std::filesystem::path& path);
};

/// Raised by stages whose input artifact is absent.
[[noreturn]] void MissingArtifact(const std::filesystem::path& path, std::string_view producer);

struct StageResult {
  Stage stage;
  std::vector<std::filesystem::path> artifacts;
  std::string summary;
};

StageResult RunIngest(const PipelineConfig& config);
StageResult RunDedup(const PipelineConfig& config);
StageResult RunAugment(const PipelineConfig& config);
StageResult RunSplit(const PipelineConfig& config);
StageResult RunTrain(const PipelineConfig& config);
StageResult RunEvaluate(const PipelineConfig& config);
StageResult RunReport(const PipelineConfig& config);

/// Dispatches one stage (serve is handled by the command-line front end).
StageResult RunStage(Stage stage, const PipelineConfig& config);

/// Runs kRunAllStages in order; the first failure propagates.
std::vector<StageResult> RunAll(const PipelineConfig& config);

/// Model configs a train stage would use, with run names.
std::vector<std::pair<std::string, ModelConfig>> ResolveModelConfigs(const PipelineConfig& config);

/// Trains one (config, fold) and saves it to `out`.
TrainedModel TrainOne(const std::string& name, const ModelConfig& model_config,
                      const FoldPlan& plan, int fold, const DatasetManifest& manifest,
                      const std::filesystem::path& out);

/// Predicts the fold's test images with the model in `model_dir` and
/// writes a prediction table to `out`. Returns the test confusion matrix.
ConfusionMatrix EvaluateOne(const std::filesystem::path& model_dir, const FoldPlan& plan, int fold,
                            const DatasetManifest& manifest, const std::filesystem::path& out);

/// Builds the cross-fold report from prediction tables named
/// <name>-fold<k>.tsv in `runs_dir`; writes `out_text` and `out_numeric`.
EvaluationReport BuildReport(const std::filesystem::path& runs_dir,
                             const std::filesystem::path& out_text,
                             const std::filesystem::path& out_numeric);

enum class SyntheticKind { kRedGreen, kRandom };

struct SyntheticOptions {
  std::filesystem::path out;
  SyntheticKind kind = SyntheticKind::kRedGreen;
  int patients_per_class = 10;
  int images_per_patient = 2;
  int width = 256;
  int height = 192;
  std::uint64_t seed = 0;
};

/// Writes PNG photos and a sources.tsv for `ingest`. Red/green: Monkeypox
/// photos are noisy red, Others noisy green. Random: uniform noise with
/// balanced labels.
std::filesystem::path MakeSynthetic(const SyntheticOptions& options);

}  // namespace mpox::pipeline

#endif  // MPOX_TOOLS_PIPELINE_HPP_
