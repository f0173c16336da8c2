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


// mpox: command-line front end for the screening pipeline.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpox/augmentation.hpp"
#include "mpox/dataset.hpp"
#include "mpox/diag.hpp"
#include "mpox/codec.hpp"
#include "mpox/error.hpp"
#include "mpox/kv_config.hpp"
#include "mpox/service/http_server.hpp"
#include "mpox/service/screening_service.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using mpox::ErrorCode;
using mpox::Fail;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string workspace = "workspace";
  std::uint64_t seed = 0;
  std::string config;
  bool json = false;
  bool quiet = false;
  int jobs = 1;
};

void PrintResult(const Globals& g, const mpox::pipeline::StageResult& r) {
  if (g.json) {
    json j;
    j["stage"] = mpox::pipeline::StageName(r.stage);
    j["summary"] = r.summary;
    j["artifacts"] = json::array();
    for (const auto& a : r.artifacts) j["artifacts"].push_back(a.string());
    std::cout << j.dump() << '\n';
  } else {
    std::cout << mpox::pipeline::StageName(r.stage) << ": " << r.summary << '\n';
    for (const auto& a : r.artifacts) std::cout << "  " << a.string() << '\n';
  }
}

void PrintError(const Globals& g, std::string_view code, std::string_view message) {
  if (g.json) {
    std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  } else {
    std::cerr << "error code=" << code << " message=" << json(message).dump() << '\n';
  }
}

std::pair<std::string, int> ParseAddress(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) {
    Fail(ErrorCode::kInvalidArgument, "--addr must be host:port, got '" + addr + "'");
  }
  int port = -1;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) {
    Fail(ErrorCode::kInvalidArgument, "--addr has an invalid port: '" + addr + "'");
  }
  return {addr.substr(0, colon), port};
}

int Serve(const Globals& g, const mpox::ServiceOptions& options, const std::string& addr) {
  const auto [host, port] = ParseAddress(addr);
  // Handle SIGINT/SIGTERM on a dedicated thread so Stop() runs outside a
  // signal handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  mpox::ScreeningService service(options);
  mpox::HttpServer server(service);
  const int bound = server.Bind(host, port);
  const auto health = service.Health();
  if (g.json) {
    std::cout << json{{"listening", host + ":" + std::to_string(bound)},
                      {"model_version", health.model_version ? json(*health.model_version)
                                                             : json(nullptr)}}
                     .dump()
              << std::endl;
  } else {
    std::cout << "listening on " << host << ":" << bound << " (model "
              << health.model_version.value_or("none") << ")" << std::endl;
  }
  std::thread([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.Stop();
  }).detach();
  server.Serve();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  mpox::pipeline::PipelineConfig pc;

  CLI::App app{"Mpox lesion screening pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("-w,--workspace", g.workspace, "Workspace directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("-c,--config", g.config, "Pipeline config file")->check(CLI::ExistingFile);
  app.add_option("-j,--jobs", g.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  std::string sources;
  auto* ingest = app.add_subcommand("ingest", "Import photos into the workspace");
  ingest->add_option("--sources", sources, "Sources table (TSV)")->check(CLI::ExistingFile);

  std::optional<int> threshold;
  auto* dedup = app.add_subcommand("dedup", "Report near-duplicate originals");
  dedup->add_option("--threshold", threshold, "Hamming distance threshold")
      ->check(CLI::Range(0, 64));

  std::vector<std::string> model_configs;
  std::string spec, plan_path, manifest_path, out_path, model_dir;
  std::optional<int> fold;

  auto* augment = app.add_subcommand("augment", "Expand originals with 13 transforms");
  augment->add_option("--spec", spec, "Augmentation spec")->check(CLI::ExistingFile);
  augment->add_option("--manifest", manifest_path, "Originals manifest (direct mode)");
  augment->add_option("--out", out_path, "Output directory (direct mode)");

  std::optional<int> folds;
  auto* split = app.add_subcommand("split", "Make patient-disjoint folds");
  split->add_option("--folds", folds, "Number of folds")->check(CLI::Range(1, 100));
  split->add_option("--manifest", manifest_path, "Originals manifest (direct mode)");
  split->add_option("--out", out_path, "Plan file to write (direct mode)");

  auto* audit = app.add_subcommand("audit", "Check a fold plan against a manifest");
  audit->add_option("--plan", plan_path, "Fold plan");
  audit->add_option("--manifest", manifest_path, "Manifest the plan refers to");

  auto* train = app.add_subcommand("train", "Train models on every fold");
  train->add_option("--config,--model-config", model_configs, "Model config (repeatable)")
      ->check(CLI::ExistingFile);
  train->add_option("--plan", plan_path, "Fold plan (single-run mode)");
  train->add_option("--fold", fold, "Fold index (single-run mode)");
  train->add_option("--manifest", manifest_path, "Training manifest (single-run mode)");
  train->add_option("--out", out_path, "Output directory (single-run mode)");

  auto* evaluate = app.add_subcommand("evaluate", "Predict test folds");
  evaluate->add_option("--model", model_dir, "Trained model directory (single-run mode)");
  evaluate->add_option("--plan", plan_path, "Fold plan");
  evaluate->add_option("--fold", fold, "Fold index");
  evaluate->add_option("--manifest", manifest_path, "Manifest holding the test images");
  evaluate->add_option("--out", out_path, "Prediction table to write");

  std::string runs_dir;
  auto* report = app.add_subcommand("report", "Aggregate predictions into the results table");
  report->add_option("--runs", runs_dir, "Directory of <name>-fold<k>.tsv tables");
  report->add_option("--out", out_path, "Output directory");

  std::string stage_name;
  auto* run = app.add_subcommand("run", "Run one stage or all of them");
  run->add_option("stage", stage_name, "Stage name or 'all'")->required();
  run->add_option("--sources", sources, "Sources table for ingest")->check(CLI::ExistingFile);

  std::string summarize_manifest;
  auto* summarize = app.add_subcommand("summarize", "Print per-class counts of a manifest");
  summarize->add_option("manifest", summarize_manifest,
                        "Manifest file (default: the workspace's newest manifest)");

  std::string registry, report_tsv, addr = "127.0.0.1:8080";
  bool retain = false;
  auto* serve = app.add_subcommand("serve", "Serve screening predictions over HTTP");
  serve->add_option("--registry", registry, "Model registry directory")->required();
  serve->add_option("--report", report_tsv, "Numeric report for default-model selection");
  serve->add_option("--addr", addr, "host:port")->capture_default_str();
  serve->add_flag("--retain", retain, "Keep prediction records");

  mpox::pipeline::SyntheticOptions synth;
  std::string synth_kind = "red-green";
  auto* make_synth = app.add_subcommand("make-synthetic", "Write a synthetic sources table");
  make_synth->add_option("--out", synth.out, "Output directory")->required();
  make_synth->add_option("--kind", synth_kind, "red-green or random")
      ->check(CLI::IsMember({"red-green", "random"}))
      ->capture_default_str();
  make_synth->add_option("--patients", synth.patients_per_class, "Patients per class")
      ->capture_default_str();
  make_synth->add_option("--images", synth.images_per_patient, "Images per patient")
      ->capture_default_str();
  make_synth->add_option("--width", synth.width)->capture_default_str();
  make_synth->add_option("--height", synth.height)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError(g, "usage", e.what());
    return kExitUsage;
  }

  if (g.json) {
    mpox::SetDiagnosticSink([quiet = g.quiet](mpox::Severity s, std::string_view topic,
                                              std::string_view msg) {
      if (quiet && s != mpox::Severity::kWarning) return;
      std::cerr << json{{"severity", s == mpox::Severity::kWarning ? "warning" : "info"},
                        {"topic", topic},
                        {"message", msg}}
                       .dump()
                << '\n';
    });
  } else if (g.quiet) {
    mpox::SetDiagnosticSink([](mpox::Severity s, std::string_view topic, std::string_view msg) {
      if (s == mpox::Severity::kWarning) {
        std::cerr << "warning [" << topic << "] " << msg << '\n';
      }
    });
  }

  try {
    pc.workspace.root = g.workspace;
    pc.seed = g.seed;
    if (!g.config.empty()) pc.ApplyFile(g.config);
    if (app.get_option("--seed")->count() > 0) pc.seed = g.seed;
    if (app.get_option("--jobs")->count() > 0) pc.jobs = g.jobs;
    if (!sources.empty()) pc.sources = sources;
    if (threshold) pc.dedup_threshold = *threshold;
    if (!spec.empty()) pc.augment_spec = spec;
    if (folds) pc.folds = *folds;
    if (!model_configs.empty()) pc.model_configs.assign(model_configs.begin(), model_configs.end());

    using mpox::pipeline::Stage;
    auto run_stage = [&](Stage s) {
      PrintResult(g, mpox::pipeline::RunStage(s, pc));
      return 0;
    };

    if (*ingest) return run_stage(Stage::kIngest);
    if (*dedup) return run_stage(Stage::kDedup);
    if (*augment) {
      if (manifest_path.empty() && out_path.empty()) return run_stage(Stage::kAugment);
      if (manifest_path.empty() || out_path.empty() || spec.empty()) {
        PrintError(g, "usage", "direct augmentation needs --manifest, --spec and --out");
        return kExitUsage;
      }
      const auto manifest = mpox::DatasetManifest::Read(manifest_path);
      const auto aug = mpox::AugmentationSpec::Load(spec);
      mpox::FilePixelSource pixels;
      const auto expanded = mpox::ExpandDataset(manifest, aug, out_path, pixels,
                                                {static_cast<unsigned>(pc.jobs)});
      const fs::path out_manifest = fs::path(out_path) / "manifest.tsv";
      expanded.Write(out_manifest);
      PrintResult(g, {Stage::kAugment, {out_manifest},
                      "expanded " + std::to_string(manifest.size()) + " originals to " +
                          std::to_string(expanded.size()) + " images"});
      return 0;
    }

    if (*split) {
      if (manifest_path.empty() && out_path.empty()) return run_stage(Stage::kSplit);
      if (manifest_path.empty() || out_path.empty()) {
        PrintError(g, "usage", "direct split needs both --manifest and --out");
        return kExitUsage;
      }
      const auto manifest = mpox::DatasetManifest::Read(manifest_path);
      const auto plan = mpox::MakeFolds(manifest, pc.seed, pc.folds);
      plan.Write(out_path);
      PrintResult(g, {Stage::kSplit, {out_path},
                      std::to_string(plan.folds.size()) + " patient-disjoint folds"});
      return 0;
    }

    if (*audit) {
      const fs::path plan_file = plan_path.empty() ? pc.workspace.FoldPlanPath() : fs::path(plan_path);
      const fs::path manifest_file =
          manifest_path.empty() ? pc.workspace.IngestManifest() : fs::path(manifest_path);
      if (!fs::exists(plan_file)) mpox::pipeline::MissingArtifact(plan_file, "split");
      if (!fs::exists(manifest_file)) mpox::pipeline::MissingArtifact(manifest_file, "ingest");
      const auto report = mpox::VerifyFoldPlan(mpox::FoldPlan::Read(plan_file),
                                               mpox::DatasetManifest::Read(manifest_file));
      std::cout << report.Format();
      return report.ok() ? 0 : kExitFailure;
    }

    if (*train) {
      const bool single = !out_path.empty() || fold.has_value();
      if (!single) return run_stage(Stage::kTrain);
      if (out_path.empty() || !fold || model_configs.size() != 1) {
        PrintError(g, "usage", "single-run training needs one --config, --fold and --out");
        return kExitUsage;
      }
      if (plan_path.empty()) plan_path = pc.workspace.FoldPlanPath().string();
      if (manifest_path.empty()) {
        manifest_path = (fs::exists(pc.workspace.AugmentManifest()) ? pc.workspace.AugmentManifest()
                                                                    : pc.workspace.IngestManifest())
                            .string();
      }
      if (!fs::exists(plan_path)) mpox::pipeline::MissingArtifact(plan_path, "split");
      if (!fs::exists(manifest_path)) mpox::pipeline::MissingArtifact(manifest_path, "ingest");
      const auto cfg = mpox::ModelConfig::Load(model_configs[0]);
      const auto plan = mpox::FoldPlan::Read(plan_path);
      const auto manifest = mpox::DatasetManifest::Read(manifest_path);
      const auto trained = mpox::pipeline::TrainOne(fs::path(model_configs[0]).stem().string(),
                                                    cfg, plan, *fold, manifest, out_path);
      PrintResult(g, {Stage::kTrain, {out_path}, "trained " + trained.version_tag});
      return 0;
    }

    if (*evaluate) {
      if (model_dir.empty()) return run_stage(Stage::kEvaluate);
      if (!fold) {
        PrintError(g, "usage", "single-run evaluation needs --fold");
        return kExitUsage;
      }
      if (plan_path.empty()) plan_path = pc.workspace.FoldPlanPath().string();
      if (manifest_path.empty()) manifest_path = pc.workspace.IngestManifest().string();
      if (out_path.empty()) out_path = (fs::path(model_dir) / "test_predictions.tsv").string();
      if (!fs::exists(plan_path)) mpox::pipeline::MissingArtifact(plan_path, "split");
      if (!fs::exists(manifest_path)) mpox::pipeline::MissingArtifact(manifest_path, "ingest");
      const auto plan = mpox::FoldPlan::Read(plan_path);
      const auto manifest = mpox::DatasetManifest::Read(manifest_path);
      const auto cm = mpox::pipeline::EvaluateOne(model_dir, plan, *fold, manifest, out_path);
      const auto m = mpox::ComputeMetrics(cm);
      PrintResult(g, {Stage::kEvaluate, {out_path}, "accuracy " + mpox::FormatDouble(m.accuracy)});
      return 0;
    }

    if (*report) {
      if (runs_dir.empty() && out_path.empty()) return run_stage(Stage::kReport);
      if (runs_dir.empty() || out_path.empty()) {
        PrintError(g, "usage", "report needs both --runs and --out, or neither");
        return kExitUsage;
      }
      fs::create_directories(out_path);
      const fs::path text = fs::path(out_path) / "report.txt";
      const fs::path numeric = fs::path(out_path) / "report.tsv";
      mpox::pipeline::BuildReport(runs_dir, text, numeric);
      if (!g.json) std::cout << mpox::ReadTextFile(text);
      PrintResult(g, {Stage::kReport, {text, numeric}, "report written"});
      return 0;
    }

    if (*run) {
      if (stage_name == "all") {
        for (const auto& r : mpox::pipeline::RunAll(pc)) PrintResult(g, r);
        return 0;
      }
      const auto stage = mpox::pipeline::ParseStage(stage_name);
      if (!stage || *stage == Stage::kServe) {
        PrintError(g, "usage", "unknown stage '" + stage_name +
                                   "'; expected ingest, dedup, augment, split, train, evaluate, "
                                   "report or all");
        return kExitUsage;
      }
      return run_stage(*stage);
    }

    if (*summarize) {
      fs::path path = summarize_manifest;
      if (path.empty()) {
        path = fs::exists(pc.workspace.AugmentManifest()) ? pc.workspace.AugmentManifest()
                                                          : pc.workspace.IngestManifest();
        if (!fs::exists(path)) mpox::pipeline::MissingArtifact(path, "ingest");
      }
      const auto manifest = mpox::DatasetManifest::Read(path);
      std::cout << mpox::FormatCountsTable(mpox::Summarize(manifest));
      return 0;
    }

    if (*serve) {
      mpox::ServiceOptions options;
      options.registry = registry;
      options.report = report_tsv;
      options.retain = retain;
      return Serve(g, options, addr);
    }

    if (*make_synth) {
      synth.kind = synth_kind == "random" ? mpox::pipeline::SyntheticKind::kRandom
                                          : mpox::pipeline::SyntheticKind::kRedGreen;
      synth.seed = pc.seed;
      const auto path = mpox::pipeline::MakeSynthetic(synth);
      if (g.json) {
        std::cout << json{{"sources", path.string()}}.dump() << '\n';
      } else {
        std::cout << path.string() << '\n';
      }
      return 0;
    }
  } catch (const mpox::Error& e) {
    PrintError(g, mpox::ErrorCodeName(e.code()), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    PrintError(g, "internal", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
