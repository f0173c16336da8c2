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


#ifndef MPOX_SERVICE_SCREENING_SERVICE_HPP_
#define MPOX_SERVICE_SCREENING_SERVICE_HPP_

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpox/dataset.hpp"
#include "mpox/image.hpp"
#include "mpox/model.hpp"

namespace mpox {

inline constexpr std::size_t kDefaultMaxPayload = 10u << 20;  // 10 MiB
inline constexpr int kMinUploadSide = 64;

/// Shown with every assessment.
extern const char kScreeningGuidance[];

/// A directory of TrainedModel subdirectories. An optional numeric report
/// (as written by the report stage) picks the default model.
class ModelRegistry {
 public:
  struct Entry {
    std::string version_tag;
    std::string name;
    std::string backbone_id;
    int fold_index = 0;
    std::string created;  // UTC, from the weights file's modification time
    std::filesystem::path dir;
  };

  /// `report` defaults to <root>/report.tsv.
  explicit ModelRegistry(std::filesystem::path root, std::filesystem::path report = {})
      : root_(std::move(root)),
        report_(report.empty() ? root_ / "report.tsv" : std::move(report)) {}

  const std::filesystem::path& root() const { return root_; }

  /// Sorted by version tag. Throws kInternal naming the path when the
  /// registry cannot be read.
  std::vector<Entry> List() const;

  /// Version with the best per-fold test accuracy in the report, else the first
  /// listed version, else nothing.
  std::optional<std::string> DefaultVersion() const;

  std::shared_ptr<const TrainedModel> Load(std::string_view version_tag) const;

 private:
  std::filesystem::path root_;
  std::filesystem::path report_;
};

struct RetentionRecord {
  std::string timestamp;  // UTC, ISO 8601
  ClassLabel label = ClassLabel::kMonkeypox;
  std::array<double, 2> probabilities{};
  std::string model_version;
};

/// Persistent sink for opted-in screening records. Records never carry
/// image bytes or client identifiers.
class RetentionStore {
 public:
  virtual ~RetentionStore() = default;
  virtual void Append(const RetentionRecord& record) = 0;
};

/// Appends one JSON object per line to a file.
class FileRetentionStore final : public RetentionStore {
 public:
  explicit FileRetentionStore(std::filesystem::path path) : path_(std::move(path)) {}
  void Append(const RetentionRecord& record) override;

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

struct ScreeningRequest {
  std::vector<std::uint8_t> payload;
  std::optional<Rect> roi;
  std::string client_nonce;
};

struct ScreeningResponse {
  ClassLabel label = ClassLabel::kMonkeypox;
  std::array<double, 2> probabilities{};  // (Monkeypox, Others)
  std::string model_version;
  std::string guidance;
  double latency_ms = 0.0;
};

struct HealthStatus {
  bool ok = false;  // false means degraded: no model loaded
  std::optional<std::string> model_version;
  double uptime_s = 0.0;
};

struct ModelListing {
  ModelRegistry::Entry entry;
  bool active = false;
};

struct ServiceOptions {
  std::filesystem::path registry;
  /// Numeric report used to pick the default model; see ModelRegistry.
  std::filesystem::path report;
  bool retain = false;
  std::size_t max_payload = kDefaultMaxPayload;
  /// Used only when `retain` is set; defaults to a FileRetentionStore at
  /// <registry>/retention.jsonl.
  std::shared_ptr<RetentionStore> retention;
};

/// Transport-independent screening logic. All methods are thread-safe.
class ScreeningService {
 public:
  /// Activates the registry's default model when one exists.
  explicit ScreeningService(ServiceOptions options);

  /// Errors: kPayloadTooLarge, kUnsupportedMedia, kInvalidArgument or
  /// kOutOfRange for a bad roi or a too-small image, kUnavailable without
  /// a model.
  ScreeningResponse Predict(const ScreeningRequest& request) const;

  HealthStatus Health() const;
  std::vector<ModelListing> Models() const;

  /// Loads and swaps in a listed version. In-flight requests finish on
  /// the model they started with.
  void Activate(std::string_view version_tag);

  /// Serves an in-memory model, bypassing the registry.
  void ActivateModel(std::shared_ptr<const TrainedModel> model);

  const ServiceOptions& options() const { return options_; }

 private:
  std::shared_ptr<const TrainedModel> Current() const;

  ServiceOptions options_;
  ModelRegistry registry_;
  std::chrono::steady_clock::time_point started_;
  mutable std::mutex mu_;
  std::shared_ptr<const TrainedModel> active_;
};

}  // namespace mpox

#endif  // MPOX_SERVICE_SCREENING_SERVICE_HPP_
