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


#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <atomic>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "mpox/augmentation.hpp"
#include "mpox/codec.hpp"
#include "mpox/dataset.hpp"
#include "mpox/dedup.hpp"
#include "mpox/diag.hpp"
#include "mpox/error.hpp"
#include "mpox/hash.hpp"
#include "mpox/kv_config.hpp"
#include "mpox/random.hpp"

namespace mpox::pipeline {
namespace fs = std::filesystem;

namespace {

constexpr int kMinSyntheticSide = 64;

void ResetDir(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
}

void Require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) MissingArtifact(path, producer);
}

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

Rect ParseRect(const std::string& text, const std::string& where) {
  Rect r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(text);
  if (!(in >> r.x >> c1 >> r.y >> c2 >> r.width >> c3 >> r.height) || c1 != ',' || c2 != ',' ||
      c3 != ',' || !(in >> std::ws).eof()) {
    Fail(ErrorCode::kInvalidArgument, where + ": roi must be x,y,w,h or -, got '" + text + "'");
  }
  return r;
}

/// Loads the manifest the train stage should use: the augmented one when
/// present, otherwise the ingested originals.
DatasetManifest TrainingManifest(const Workspace& ws) {
  if (fs::exists(ws.AugmentManifest())) return DatasetManifest::Read(ws.AugmentManifest());
  Require(ws.IngestManifest(), "ingest");
  Info("train", "no augmented manifest; training on originals only");
  return DatasetManifest::Read(ws.IngestManifest());
}

struct PredictionTable {
  PredictionBatch predictions;
  TruthMap truth;
};

PredictionTable ReadPredictionTable(const fs::path& path) {
  PredictionTable t;
  std::istringstream in(ReadTextFile(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = SplitTabs(line);
    if (f.size() != 5) {
      Fail(ErrorCode::kDataLoss, path.string() + ":" + std::to_string(line_no) +
                                     ": expected 5 fields");
    }
    Prediction p;
    p.image_id = f[0];
    p.predicted = ParseLabel(f[2]);
    try {
      p.probabilities = {std::stod(f[3]), std::stod(f[4])};
    } catch (const std::exception&) {
      Fail(ErrorCode::kDataLoss, path.string() + ":" + std::to_string(line_no) +
                                     ": malformed probability");
    }
    t.truth[p.image_id] = ParseLabel(f[1]);
    t.predictions.push_back(std::move(p));
  }
  return t;
}

int NetworkRank(const std::string& name) {
  static const char* kOrder[] = {"vgg16", "resnet50", "inceptionv3"};
  for (int i = 0; i < 3; ++i) {
    if (name == kOrder[i]) return i;
  }
  return 3;
}

}  // namespace

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kDedup: return "dedup";
    case Stage::kAugment: return "augment";
    case Stage::kSplit: return "split";
    case Stage::kTrain: return "train";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kReport: return "report";
    case Stage::kServe: return "serve";
  }
  return "?";
}

std::optional<Stage> ParseStage(std::string_view name) {
  for (Stage s : {Stage::kIngest, Stage::kDedup, Stage::kAugment, Stage::kSplit, Stage::kTrain,
                  Stage::kEvaluate, Stage::kReport, Stage::kServe}) {
    if (StageName(s) == name) return s;
  }
  return std::nullopt;
}

fs::path Workspace::RunDir(std::string_view name, int fold) const {
  return TrainDir() / (std::string(name) + "-fold" + std::to_string(fold));
}

void PipelineConfig::ApplyFile(const fs::path& path) {
  const auto kv = KeyValueConfig::Load(path);
  kv.RejectUnknownKeys({"sources", "dedup_threshold", "augment_spec", "folds", "model_configs",
                        "jobs", "seed"});
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  if (kv.Has("sources")) sources = resolve(kv.GetString("sources"));
  if (kv.Has("dedup_threshold")) dedup_threshold = static_cast<int>(kv.GetInt("dedup_threshold"));
  if (kv.Has("augment_spec")) augment_spec = resolve(kv.GetString("augment_spec"));
  if (kv.Has("folds")) folds = static_cast<int>(kv.GetInt("folds"));
  if (kv.Has("jobs")) jobs = static_cast<int>(kv.GetInt("jobs"));
  if (kv.Has("seed")) seed = kv.GetU64("seed");
  if (kv.Has("model_configs")) {
    model_configs.clear();
    std::istringstream in(kv.GetString("model_configs"));
    std::string item;
    while (std::getline(in, item, ',')) {
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (!item.empty()) model_configs.push_back(resolve(item));
    }
  }
}

void MissingArtifact(const fs::path& path, std::string_view producer) {
  Fail(ErrorCode::kFailedPrecondition, "missing artifact " + path.string() + " (produced by the " +
                                           std::string(producer) + " stage)");
}

// ---------------------------------------------------------------------------

StageResult RunIngest(const PipelineConfig& config) {
  const Workspace& ws = config.workspace;
  if (config.sources.empty()) {
    Fail(ErrorCode::kFailedPrecondition, "ingest needs a sources table (--sources)");
  }
  Require(config.sources, "user-provided sources");
  const fs::path dir = ws.StageDir(Stage::kIngest);
  ResetDir(dir);
  const fs::path base = config.sources.parent_path();

  DatasetManifest manifest(dir);
  std::istringstream in(ReadTextFile(config.sources));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = config.sources.string() + ":" + std::to_string(line_no);
    const auto f = SplitTabs(line);
    if (f.size() < 5 || f.size() > 6) {
      Fail(ErrorCode::kInvalidArgument,
           where + ": expected image_id, patient_id, label, path, roi[, note]");
    }
    IngestMeta meta;
    meta.image_id = f[0];
    meta.patient_id = f[1];
    meta.label = ParseLabel(f[2]);
    meta.source_note = f.size() == 6 ? f[5] : "";
    const fs::path src = fs::path(f[3]).is_absolute() ? fs::path(f[3]) : base / f[3];
    Image raw;
    try {
      raw = DecodeImage(ReadFileBytes(src));
    } catch (const Error& e) {
      Fail(e.code(), where + ": " + e.what());
    }
    const Rect roi = f[4] == "-" ? Rect{0, 0, raw.width(), raw.height()} : ParseRect(f[4], where);
    LesionImage img;
    try {
      img = IngestImage(raw, roi, meta);
    } catch (const Error& e) {
      Fail(e.code(), where + ": " + e.what());
    }
    manifest.Add(StoreImage(img, dir));
  }
  manifest.Validate();
  manifest.Write(ws.IngestManifest());
  const auto summary = Summarize(manifest);
  WriteTextFile(dir / "summary.tsv", FormatCountsTable(summary));
  return {Stage::kIngest,
          {ws.IngestManifest(), dir / "summary.tsv"},
          "ingested " + std::to_string(manifest.size()) + " images from " +
              std::to_string(summary.total.unique_patients) + " patients"};
}

StageResult RunDedup(const PipelineConfig& config) {
  const Workspace& ws = config.workspace;
  Require(ws.IngestManifest(), "ingest");
  const auto manifest = DatasetManifest::Read(ws.IngestManifest());
  ResetDir(ws.StageDir(Stage::kDedup));
  const auto report = DetectDuplicates(manifest, config.dedup_threshold);
  WriteTextFile(ws.DedupReport(), FormatDuplicateReport(report));
  return {Stage::kDedup,
          {ws.DedupReport()},
          std::to_string(report.groups.size()) + " near-duplicate groups"};
}

StageResult RunAugment(const PipelineConfig& config) {
  const Workspace& ws = config.workspace;
  Require(ws.IngestManifest(), "ingest");
  const auto manifest = DatasetManifest::Read(ws.IngestManifest());
  AugmentationSpec spec;
  if (!config.augment_spec.empty()) {
    Require(config.augment_spec, "user-provided augmentation spec");
    spec = AugmentationSpec::Load(config.augment_spec);
  } else {
    spec.master_seed = DeriveSeed(config.seed, "augment");
  }
  const fs::path dir = ws.StageDir(Stage::kAugment);
  ResetDir(dir);
  spec.Save(ws.AugmentSpec());
  FilePixelSource pixels;
  ExpandOptions opts;
  opts.threads = static_cast<unsigned>(std::max(1, config.jobs));
  const auto expanded = ExpandDataset(manifest, spec, dir, pixels, opts);
  expanded.Write(ws.AugmentManifest());
  WriteTextFile(dir / "summary.tsv", FormatCountsTable(Summarize(expanded)));
  return {Stage::kAugment,
          {ws.AugmentSpec(), ws.AugmentManifest(), dir / "summary.tsv"},
          "expanded " + std::to_string(manifest.size()) + " originals to " +
              std::to_string(expanded.size()) + " images"};
}

StageResult RunSplit(const PipelineConfig& config) {
  const Workspace& ws = config.workspace;
  Require(ws.IngestManifest(), "ingest");
  const auto manifest = DatasetManifest::Read(ws.IngestManifest());
  ResetDir(ws.StageDir(Stage::kSplit));
  const FoldPlan plan = MakeFolds(manifest, DeriveSeed(config.seed, "split"), config.folds);
  plan.Write(ws.FoldPlanPath());
  const AuditReport audit = VerifyFoldPlan(plan, manifest);
  WriteTextFile(ws.AuditPath(), audit.Format());
  if (!audit.ok()) {
    Fail(ErrorCode::kInternal, "fold plan failed its audit; see " + ws.AuditPath().string());
  }
  return {Stage::kSplit,
          {ws.FoldPlanPath(), ws.AuditPath()},
          std::to_string(plan.folds.size()) + " patient-disjoint folds"};
}

std::vector<std::pair<std::string, ModelConfig>> ResolveModelConfigs(const PipelineConfig& config) {
  std::vector<std::pair<std::string, ModelConfig>> out;
  if (config.model_configs.empty()) {
    for (const char* name : {"tiny_a", "tiny_b", "tiny_c"}) {
      out.emplace_back(name, ModelConfig::TinyPreset(DeriveSeed(config.seed, "train", name)));
    }
    return out;
  }
  std::set<std::string> names;
  for (const auto& path : config.model_configs) {
    Require(path, "user-provided model config");
    const std::string name = path.stem().string();
    if (!IsValidId(name) || !names.insert(name).second) {
      Fail(ErrorCode::kInvalidArgument,
           "model config " + path.string() + " needs a unique, path-safe file name");
    }
    out.emplace_back(name, ModelConfig::Load(path));
  }
  return out;
}

TrainedModel TrainOne(const std::string& name, const ModelConfig& model_config,
                      const FoldPlan& plan, int fold, const DatasetManifest& manifest,
                      const fs::path& out) {
  if (fold < 0 || fold >= static_cast<int>(plan.folds.size())) {
    Fail(ErrorCode::kOutOfRange, "fold " + std::to_string(fold) + " is not in the plan (" +
                                     std::to_string(plan.folds.size()) + " folds)");
  }
  const FoldAssignment assignment = ResolveFold(plan, fold, manifest);
  FilePixelSource pixels;
  TrainOptions opts;
  opts.on_epoch = [&](const EpochRecord& r) {
    std::ostringstream msg;
    msg << name << " fold " << fold << " epoch " << r.epoch << ": train_loss "
        << FormatDouble(r.train_loss) << ", val_loss " << FormatDouble(r.val_loss)
        << ", val_accuracy " << FormatDouble(r.val_accuracy);
    Info("train", msg.str());
  };
  TrainedModel trained =
      Train(Classifier::Build(model_config), assignment, fold, manifest, pixels, opts);
  trained.name = name;
  trained.Save(out);
  return trained;
}

StageResult RunTrain(const PipelineConfig& config) {
  const Workspace& ws = config.workspace;
  Require(ws.FoldPlanPath(), "split");
  const FoldPlan plan = FoldPlan::Read(ws.FoldPlanPath());
  const DatasetManifest manifest = TrainingManifest(ws);
  const auto models = ResolveModelConfigs(config);
  ResetDir(ws.TrainDir());
  fs::create_directories(ws.TrainDir() / "configs");
  for (const auto& [name, cfg] : models) cfg.Save(ws.TrainDir() / "configs" / (name + ".cfg"));

  struct Job {
    std::size_t model;
    int fold;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (int k = 0; k < static_cast<int>(plan.folds.size()); ++k) jobs.push_back({m, k});
  }
  std::vector<std::string> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      {
        std::lock_guard<std::mutex> lock(error_mu);
        if (error) return;
      }
      try {
        const auto& [name, cfg] = models[jobs[j].model];
        const auto trained = TrainOne(name, cfg, plan, jobs[j].fold, manifest,
                                      ws.RunDir(name, jobs[j].fold));
        rows[j] = name + "\t" + std::to_string(jobs[j].fold) + "\t" + trained.version_tag + "\t" +
                  std::to_string(trained.best_epoch) + "\n";
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(config.jobs, 1, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::string index = "# name\tfold\tversion_tag\tbest_epoch\n";
  for (const auto& r : rows) index += r;
  WriteTextFile(ws.TrainDir() / "runs.tsv", index);
  return {Stage::kTrain,
          {ws.TrainDir() / "runs.tsv"},
          "trained " + std::to_string(jobs.size()) + " models"};
}

ConfusionMatrix EvaluateOne(const fs::path& model_dir, const FoldPlan& plan, int fold,
                            const DatasetManifest& manifest, const fs::path& out) {
  Require(model_dir / "meta.cfg", "train");
  if (fold < 0 || fold >= static_cast<int>(plan.folds.size())) {
    Fail(ErrorCode::kOutOfRange, "fold " + std::to_string(fold) + " is not in the plan");
  }
  const TrainedModel model = TrainedModel::Load(model_dir);
  const auto& test_ids = plan.folds[fold].test;
  FilePixelSource pixels;
  std::vector<LesionImage> images;
  images.reserve(test_ids.size());
  for (const auto& id : test_ids) {
    const ManifestEntry& e = manifest.Get(id);
    images.push_back({e.meta, pixels.Load(manifest, e)});
  }
  const PredictionBatch preds = Predict(*model.model, images);
  std::string table = "# image_id\ttruth\tpredicted\tp_monkeypox\tp_others\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    table += preds[i].image_id + "\t" + std::string(LabelName(images[i].meta.label)) + "\t" +
             std::string(LabelName(preds[i].predicted)) + "\t" +
             FormatDouble(preds[i].probabilities[0]) + "\t" +
             FormatDouble(preds[i].probabilities[1]) + "\n";
  }
  WriteTextFile(out, table);
  return ComputeConfusion(preds, TruthFromManifest(manifest, test_ids));
}

StageResult RunEvaluate(const PipelineConfig& config) {
  const Workspace& ws = config.workspace;
  Require(ws.FoldPlanPath(), "split");
  Require(ws.IngestManifest(), "ingest");
  Require(ws.TrainDir() / "runs.tsv", "train");
  const FoldPlan plan = FoldPlan::Read(ws.FoldPlanPath());
  const DatasetManifest manifest = DatasetManifest::Read(ws.IngestManifest());
  ResetDir(ws.EvaluateDir());

  std::vector<fs::path> artifacts;
  std::istringstream in(ReadTextFile(ws.TrainDir() / "runs.tsv"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = SplitTabs(line);
    if (f.size() < 2) Fail(ErrorCode::kDataLoss, "malformed runs.tsv line: " + line);
    const int fold = std::stoi(f[1]);
    const fs::path out = ws.EvaluateDir() / (f[0] + "-fold" + std::to_string(fold) + ".tsv");
    const auto cm = EvaluateOne(ws.RunDir(f[0], fold), plan, fold, manifest, out);
    const MetricSet m = ComputeMetrics(cm);
    Info("evaluate", f[0] + " fold " + std::to_string(fold) + ": accuracy " + FormatDouble(m.accuracy));
    artifacts.push_back(out);
  }
  return {Stage::kEvaluate, artifacts,
          "evaluated " + std::to_string(artifacts.size()) + " models on their test folds"};
}

EvaluationReport BuildReport(const fs::path& runs_dir, const fs::path& out_text,
                             const fs::path& out_numeric) {
  if (!fs::is_directory(runs_dir)) MissingArtifact(runs_dir, "evaluate");
  static const std::regex kName(R"((.+)-fold([0-9]+)\.tsv)");
  std::map<std::string, std::map<int, PredictionTable>> runs;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs_dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::smatch m;
    const std::string fname = path.filename().string();
    if (!std::regex_match(fname, m, kName)) continue;
    runs[m[1].str()][std::stoi(m[2].str())] = ReadPredictionTable(path);
  }
  if (runs.empty()) {
    Fail(ErrorCode::kFailedPrecondition, "no prediction tables in " + runs_dir.string());
  }
  std::set<int> fold_ids;
  for (const auto& [name, folds] : runs) {
    for (const auto& [k, table] : folds) fold_ids.insert(k);
  }
  const int num_folds = static_cast<int>(fold_ids.size());
  for (const auto& [name, folds] : runs) {
    for (int k : fold_ids) {
      if (!folds.count(k)) {
        Fail(ErrorCode::kFailedPrecondition, "network " + name + " lacks fold " + std::to_string(k));
      }
    }
  }

  std::vector<std::string> names;
  for (const auto& [name, folds] : runs) names.push_back(name);
  std::stable_sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
    return NetworkRank(a) < NetworkRank(b);
  });

  EvaluationReport report;
  for (const auto& name : names) {
    std::vector<MetricSet> pos, macro;
    for (const auto& [k, table] : runs[name]) {
      const auto cm = ComputeConfusion(table.predictions, table.truth);
      pos.push_back(ComputeMetrics(cm));
      macro.push_back(ComputeMacroMetrics(cm));
    }
    report.networks.push_back(AggregateFolds(name, pos, macro, num_folds));
  }

  if (names.size() == 3) {
    std::vector<MetricSet> pos, macro;
    for (int k : fold_ids) {
      std::vector<PredictionBatch> members;
      for (const auto& name : names) {
        PredictionBatch b = runs[name][k].predictions;
        std::sort(b.begin(), b.end(),
                  [](const Prediction& x, const Prediction& y) { return x.image_id < y.image_id; });
        members.push_back(std::move(b));
      }
      const auto cm = ComputeConfusion(EnsemblePredictions(members), runs[names[0]][k].truth);
      pos.push_back(ComputeMetrics(cm));
      macro.push_back(ComputeMacroMetrics(cm));
    }
    report.networks.push_back(AggregateFolds("ensemble", pos, macro, num_folds));
  } else {
    Info("report", "ensemble row needs exactly 3 networks; found " + std::to_string(names.size()));
  }

  WriteTextFile(out_text, FormatReportText(report));
  WriteTextFile(out_numeric, FormatReportNumeric(report));
  return report;
}

StageResult RunReport(const PipelineConfig& config) {
  const Workspace& ws = config.workspace;
  if (!fs::is_directory(ws.EvaluateDir())) MissingArtifact(ws.EvaluateDir(), "evaluate");
  ResetDir(ws.StageDir(Stage::kReport));
  const auto report = BuildReport(ws.EvaluateDir(), ws.ReportText(), ws.ReportNumeric());
  return {Stage::kReport,
          {ws.ReportText(), ws.ReportNumeric()},
          "report over " + std::to_string(report.networks.size()) + " networks"};
}

StageResult RunStage(Stage stage, const PipelineConfig& config) {
  switch (stage) {
    case Stage::kIngest: return RunIngest(config);
    case Stage::kDedup: return RunDedup(config);
    case Stage::kAugment: return RunAugment(config);
    case Stage::kSplit: return RunSplit(config);
    case Stage::kTrain: return RunTrain(config);
    case Stage::kEvaluate: return RunEvaluate(config);
    case Stage::kReport: return RunReport(config);
    case Stage::kServe: break;
  }
  Fail(ErrorCode::kInvalidArgument, "stage 'serve' runs through the serve command");
}

std::vector<StageResult> RunAll(const PipelineConfig& config) {
  std::vector<StageResult> results;
  for (Stage s : kRunAllStages) {
    results.push_back(RunStage(s, config));
    Info(StageName(s), results.back().summary);
  }
  return results;
}

// ---------------------------------------------------------------------------

fs::path MakeSynthetic(const SyntheticOptions& o) {
  if (o.patients_per_class < 1 || o.images_per_patient < 1 || o.width < kMinSyntheticSide ||
      o.height < kMinSyntheticSide) {
    Fail(ErrorCode::kInvalidArgument, "synthetic dataset dimensions are too small");
  }
  fs::create_directories(o.out);
  std::string sources = "# image_id\tpatient_id\tlabel\tpath\troi\tsource_note\n";
  for (ClassLabel label : kAllLabels) {
    const std::string prefix = label == ClassLabel::kMonkeypox ? "mpx" : "oth";
    for (int p = 0; p < o.patients_per_class; ++p) {
      char pid[32];
      std::snprintf(pid, sizeof pid, "%s_p%03d", prefix.c_str(), p);
      for (int i = 0; i < o.images_per_patient; ++i) {
        const std::string id = std::string(pid) + "_i" + std::to_string(i);
        Rng rng(DeriveSeed(o.seed, "synthetic", id));
        Image img(o.width, o.height);
        for (int y = 0; y < o.height; ++y) {
          for (int x = 0; x < o.width; ++x) {
            for (int c = 0; c < 3; ++c) {
              double v;
              if (o.kind == SyntheticKind::kRandom) {
                v = rng.Uniform(0.0, 256.0);
              } else {
                const int hot = label == ClassLabel::kMonkeypox ? 0 : 1;
                v = (c == hot ? 215.0 : 30.0) + rng.Uniform(-25.0, 25.0);
              }
              img.at(x, y, c) = ClampToByte(std::floor(v));
            }
          }
        }
        const std::string file = id + ".png";
        WritePngFile(o.out / file, img);
        const int mx = o.width / 16, my = o.height / 16;
        sources += id + "\t" + pid + "\t" + std::string(LabelName(label)) + "\t" + file + "\t" +
                   std::to_string(mx) + "," + std::to_string(my) + "," +
                   std::to_string(o.width - 2 * mx) + "," + std::to_string(o.height - 2 * my) +
                   "\tsynthetic\n";
      }
    }
  }
  const fs::path path = o.out / "sources.tsv";
  WriteTextFile(path, sources);
  return path;
}

}  // namespace mpox::pipeline
