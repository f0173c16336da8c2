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


#include "mpox/service/screening_service.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "mpox/codec.hpp"
#include "mpox/diag.hpp"
#include "mpox/error.hpp"

namespace mpox {

const char kScreeningGuidance[] =
    "This is an automated screening aid, not a medical diagnosis. A result of Monkeypox means "
    "the photo resembles monkeypox lesions; please consult a physician or your local health "
    "service for assessment and testing, especially if you have a new rash with fever or "
    "swollen lymph nodes. A result of Others does not rule out monkeypox.";

namespace {

std::string NowUtc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void FileRetentionStore::Append(const RetentionRecord& r) {
  nlohmann::json j = {{"timestamp", r.timestamp},
                      {"label", LabelName(r.label)},
                      {"probabilities", {r.probabilities[0], r.probabilities[1]}},
                      {"model_version", r.model_version}};
  std::lock_guard<std::mutex> lock(mu_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) Fail(ErrorCode::kInternal, "cannot append to " + path_.string());
  out << j.dump() << '\n';
}

ScreeningService::ScreeningService(ServiceOptions options)
    : options_(std::move(options)),
      registry_(options_.registry, options_.report),
      started_(std::chrono::steady_clock::now()) {
  if (options_.retain && !options_.retention) {
    options_.retention = std::make_shared<FileRetentionStore>(options_.registry / "retention.jsonl");
  }
  if (!options_.registry.empty() && std::filesystem::exists(options_.registry)) {
    if (auto version = registry_.DefaultVersion()) {
      try {
        active_ = registry_.Load(*version);
        Info("serve", "active model " + *version);
      } catch (const Error& e) {
        Warn("serve", std::string("could not load default model: ") + e.what());
      }
    }
  }
}

std::shared_ptr<const TrainedModel> ScreeningService::Current() const {
  std::lock_guard<std::mutex> lock(mu_);
  return active_;
}

ScreeningResponse ScreeningService::Predict(const ScreeningRequest& request) const {
  const auto start = std::chrono::steady_clock::now();
  if (request.payload.size() > options_.max_payload) {
    Fail(ErrorCode::kPayloadTooLarge, "upload of " + std::to_string(request.payload.size()) +
                                          " bytes exceeds the limit of " +
                                          std::to_string(options_.max_payload) + " bytes");
  }
  const auto model = Current();
  if (!model) Fail(ErrorCode::kUnavailable, "no model is loaded");

  const Image raw = DecodeImage(request.payload);
  const Rect roi = request.roi.value_or(Rect{0, 0, raw.width(), raw.height()});
  ValidateRoi(roi, raw.width(), raw.height());
  if (std::min(roi.width, roi.height) < kMinUploadSide) {
    Fail(ErrorCode::kInvalidArgument,
         "image region " + std::to_string(roi.width) + "x" + std::to_string(roi.height) +
             " is smaller than the " + std::to_string(kMinUploadSide) + " px minimum");
  }
  IngestMeta meta;
  meta.image_id = "upload";
  meta.patient_id = "anonymous";
  const LesionImage image = IngestImage(raw, roi, meta);
  const PredictionBatch preds = mpox::Predict(*model->model, std::span<const LesionImage>(&image, 1));

  ScreeningResponse resp;
  resp.label = preds[0].predicted;
  resp.probabilities = preds[0].probabilities;
  resp.model_version = model->version_tag;
  resp.guidance = kScreeningGuidance;
  resp.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (options_.retain && options_.retention) {
    options_.retention->Append({NowUtc(), resp.label, resp.probabilities, resp.model_version});
  }
  return resp;
}

HealthStatus ScreeningService::Health() const {
  HealthStatus h;
  const auto model = Current();
  h.ok = model != nullptr;
  if (model) h.model_version = model->version_tag;
  h.uptime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return h;
}

std::vector<ModelListing> ScreeningService::Models() const {
  const auto model = Current();
  std::vector<ModelListing> out;
  for (auto& e : registry_.List()) {
    const bool active = model && model->version_tag == e.version_tag;
    out.push_back({std::move(e), active});
  }
  return out;
}

void ScreeningService::Activate(std::string_view version_tag) {
  auto loaded = registry_.Load(version_tag);
  std::lock_guard<std::mutex> lock(mu_);
  active_ = std::move(loaded);
}

void ScreeningService::ActivateModel(std::shared_ptr<const TrainedModel> model) {
  std::lock_guard<std::mutex> lock(mu_);
  active_ = std::move(model);
}

}  // namespace mpox
