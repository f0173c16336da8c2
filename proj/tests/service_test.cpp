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

#include <atomic>
#include <fstream>
#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mpox/codec.hpp"
#include "mpox/error.hpp"
#include "mpox/partitioning.hpp"
#include "mpox/service/http_server.hpp"
#include "mpox/service/screening_service.hpp"
#include "test_util.hpp"

namespace mpox {
namespace {

using nlohmann::json;
using testing::TempDir;

std::string Png(const Image& image) {
  const auto bytes = EncodePng(image);
  return std::string(bytes.begin(), bytes.end());
}

/// Counts appends and keeps the records for inspection.
class CountingStore final : public RetentionStore {
 public:
  void Append(const RetentionRecord& r) override {
    std::lock_guard<std::mutex> lock(mu);
    records.push_back(r);
  }
  std::mutex mu;
  std::vector<RetentionRecord> records;
};

/// Runs an HttpServer on an ephemeral port for the lifetime of the object.
class LiveServer {
 public:
  explicit LiveServer(ScreeningService& svc) : server_(svc) {
    port_ = server_.Bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.Serve(); });
    server_.WaitUntilReady();
  }
  ~LiveServer() {
    server_.Stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }

 private:
  HttpServer server_;
  int port_ = 0;
  std::thread thread_;
};

httplib::Result PostImage(httplib::Client& c, const std::string& bytes,
                          const std::string& type = "image/png",
                          httplib::MultipartFormDataItems extra = {}) {
  extra.push_back({"image", bytes, "upload.png", type});
  return c.Post("/api/v1/predict", extra);
}

/// Three untrained registry entries plus one model trained on red/green.
class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    registry_ = dir_->path() / "registry";
    for (int fold = 0; fold < 3; ++fold) {
      TrainedModel t;
      t.config = ModelConfig::TinyPreset(11);
      t.name = "tiny";
      t.fold_index = fold;
      t.version_tag = MakeVersionTag(t.config, fold);
      t.model = std::make_shared<Classifier>(Classifier::Build(t.config));
      t.Save(registry_ / t.version_tag);
    }
    const auto manifest = testing::StoredManifest(dir_->path() / "rg", 6, 2,
                                                  testing::ColorScheme::kRedGreen, 1);
    const auto plan = MakeFolds(manifest, 3);
    FilePixelSource px;
    ModelConfig c = ModelConfig::TinyPreset(4);
    c.max_epochs = 25;
    c.early_stop_patience = 25;
    trained_ = std::make_shared<const TrainedModel>(
        Train(Classifier::Build(c), ResolveFold(plan, 0, manifest), 0, manifest, px));
  }
  static void TearDownTestSuite() {
    trained_.reset();
    delete dir_;
  }

  static ServiceOptions Options() {
    ServiceOptions o;
    o.registry = registry_;
    return o;
  }

  static TempDir* dir_;
  static std::filesystem::path registry_;
  static std::shared_ptr<const TrainedModel> trained_;
};
TempDir* ServiceTest::dir_ = nullptr;
std::filesystem::path ServiceTest::registry_;
std::shared_ptr<const TrainedModel> ServiceTest::trained_;

TEST_F(ServiceTest, PredictResponseSchema) {
  ScreeningService svc(Options());
  LiveServer live(svc);
  auto c = live.client();
  auto res = PostImage(c, Png(testing::NoiseImage(120, 90, 3)));
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const auto j = json::parse(res->body);
  for (const char* key : {"label", "probabilities", "model_version", "guidance", "latency_ms"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const double pm = j["probabilities"]["Monkeypox"];
  const double po = j["probabilities"]["Others"];
  EXPECT_NEAR(pm + po, 1.0, 1e-6);
  EXPECT_EQ(j["label"], pm >= po ? "Monkeypox" : "Others");
  EXPECT_EQ(j["guidance"], kScreeningGuidance);
  EXPECT_GE(j["latency_ms"].get<double>(), 0.0);
  EXPECT_EQ(j["model_version"], *svc.Health().model_version);
}

TEST_F(ServiceTest, RoiFieldsAreHonoured) {
  ScreeningService svc(Options());
  svc.ActivateModel(trained_);
  LiveServer live(svc);
  auto c = live.client();
  // Red region on the left, green on the right; the roi picks the red half.
  Image img = testing::SolidImage(200, 100, 0, 255, 0);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) {
      img.at(x, y, 0) = 255;
      img.at(x, y, 1) = 0;
    }
  auto red = PostImage(c, Png(img), "image/png", {{"x", "0", "", ""}, {"y", "0", "", ""},
                                                  {"w", "100", "", ""}, {"h", "100", "", ""}});
  ASSERT_EQ(red->status, 200) << red->body;
  EXPECT_EQ(json::parse(red->body)["label"], "Monkeypox");
  auto green = PostImage(c, Png(img), "image/png", {{"x", "100", "", ""}, {"y", "0", "", ""},
                                                    {"w", "100", "", ""}, {"h", "100", "", ""}});
  ASSERT_EQ(green->status, 200) << green->body;
  EXPECT_EQ(json::parse(green->body)["label"], "Others");
}

TEST_F(ServiceTest, ErrorStatuses) {
  ScreeningService svc(Options());
  LiveServer live(svc);
  auto c = live.client();

  auto text = PostImage(c, "hello, not an image", "text/plain");
  ASSERT_TRUE(text);
  EXPECT_EQ(text->status, 415);
  EXPECT_EQ(json::parse(text->body)["error"], "unsupported_media_type");

  auto big = PostImage(c, std::string((10u << 20) + 1, 'x'));
  ASSERT_TRUE(big);
  EXPECT_EQ(big->status, 413);

  auto oob = PostImage(c, Png(testing::NoiseImage(100, 100, 1)), "image/png",
                       {{"x", "50", "", ""}, {"y", "50", "", ""}, {"w", "80", "", ""},
                        {"h", "80", "", ""}});
  ASSERT_TRUE(oob);
  EXPECT_EQ(oob->status, 400);

  auto partial = PostImage(c, Png(testing::NoiseImage(100, 100, 1)), "image/png",
                           {{"x", "0", "", ""}});
  EXPECT_EQ(partial->status, 400);

  auto small = PostImage(c, Png(testing::NoiseImage(63, 200, 1)));
  ASSERT_TRUE(small);
  EXPECT_EQ(small->status, 400);
  EXPECT_NE(small->body.find("64"), std::string::npos);

  auto missing = c.Post("/api/v1/predict", httplib::MultipartFormDataItems{});
  EXPECT_EQ(missing->status, 400);
}

TEST_F(ServiceTest, PayloadLimitIsExactAtTheServiceLayer) {
  ServiceOptions o = Options();
  o.max_payload = 1000;
  ScreeningService svc(o);
  ScreeningRequest r;
  r.payload.assign(1001, 0);
  try {
    svc.Predict(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPayloadTooLarge);
  }
  r.payload.resize(1000);
  try {
    svc.Predict(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedMedia);
  }
}

TEST_F(ServiceTest, NoModelIsUnavailableAndDegraded) {
  TempDir empty;
  ServiceOptions o;
  o.registry = empty.path();
  ScreeningService svc(o);
  LiveServer live(svc);
  auto c = live.client();
  auto res = PostImage(c, Png(testing::NoiseImage(100, 100, 1)));
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 503);
  auto health = c.Get("/api/v1/health");
  ASSERT_EQ(health->status, 200);
  const auto j = json::parse(health->body);
  EXPECT_EQ(j["status"], "degraded");
  EXPECT_TRUE(j["model_version"].is_null());
  auto models = c.Get("/api/v1/models");
  EXPECT_EQ(json::parse(models->body)["models"].size(), 0u);
}

TEST_F(ServiceTest, HealthUptimeIsMonotonic) {
  ScreeningService svc(Options());
  LiveServer live(svc);
  auto c = live.client();
  const auto a = json::parse(c.Get("/api/v1/health")->body);
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  const auto b = json::parse(c.Get("/api/v1/health")->body);
  EXPECT_EQ(a["status"], "ok");
  EXPECT_GT(b["uptime_s"].get<double>(), a["uptime_s"].get<double>());
}

TEST_F(ServiceTest, ModelsListAndActivate) {
  ScreeningService svc(Options());
  LiveServer live(svc);
  auto c = live.client();
  auto list = json::parse(c.Get("/api/v1/models")->body)["models"];
  ASSERT_EQ(list.size(), 3u);
  int active = 0;
  std::string inactive;
  for (const auto& m : list) {
    for (const char* key : {"version_tag", "name", "backbone_id", "fold_index", "created"}) {
      EXPECT_TRUE(m.contains(key)) << key;
    }
    if (m["active"].get<bool>()) {
      ++active;
    } else {
      inactive = m["version_tag"];
    }
  }
  EXPECT_EQ(active, 1);

  auto res = c.Post("/api/v1/models/" + inactive + "/activate");
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(json::parse(c.Get("/api/v1/health")->body)["model_version"], inactive);
  for (const auto& m : json::parse(c.Get("/api/v1/models")->body)["models"]) {
    EXPECT_EQ(m["active"].get<bool>(), m["version_tag"] == inactive);
  }
  EXPECT_EQ(c.Post("/api/v1/models/nope/activate")->status, 404);
}

TEST_F(ServiceTest, ReportPicksTheDefaultModel) {
  const auto entries = ModelRegistry(registry_).List();
  ASSERT_EQ(entries.size(), 3u);
  TempDir d;
  WriteTextFile(d / "report.tsv",
                "# network\tscope\tfold\taccuracy\tprecision\trecall\tf1\n"
                "tiny\tpositive\t0\t0.5\t0\t0\t0\n"
                "tiny\tpositive\t1\t0.9\t0\t0\t0\n"
                "tiny\tpositive\t2\t0.7\t0\t0\t0\n"
                "tiny\tmacro\t0\t0.99\t0\t0\t0\n");
  const ModelRegistry reg(registry_, d / "report.tsv");
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [](const auto& e) { return e.fold_index == 1; });
  EXPECT_EQ(reg.DefaultVersion(), it->version_tag);
}

TEST_F(ServiceTest, UnreadableRegistryIsInternal) {
  ServiceOptions o;
  o.registry = dir_->path() / "does-not-exist";
  ScreeningService svc(o);
  LiveServer live(svc);
  auto c = live.client();
  auto res = c.Get("/api/v1/models");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 500);
  EXPECT_EQ(json::parse(res->body)["error"], "internal");
}

TEST_F(ServiceTest, RetentionOffWritesNothing) {
  auto store = std::make_shared<CountingStore>();
  ServiceOptions o = Options();
  o.retain = false;
  o.retention = store;
  ScreeningService svc(o);
  LiveServer live(svc);
  auto c = live.client();
  for (int i = 0; i < 3; ++i) {
    ASSERT_EQ(PostImage(c, Png(testing::NoiseImage(80, 80, i)))->status, 200);
  }
  EXPECT_TRUE(store->records.empty());
  EXPECT_FALSE(std::filesystem::exists(registry_ / "retention.jsonl"));
}

TEST_F(ServiceTest, RetentionOnKeepsNoImageBytes) {
  TempDir d;
  std::filesystem::copy(registry_, d / "reg", std::filesystem::copy_options::recursive);
  ServiceOptions o;
  o.registry = d / "reg";
  o.retain = true;
  ScreeningService svc(o);
  LiveServer live(svc);
  auto c = live.client();
  const std::string upload = Png(testing::NoiseImage(80, 80, 5));
  auto res = PostImage(c, upload, "image/png", {{"client_nonce", "nonce-1234", "", ""}});
  ASSERT_EQ(res->status, 200);
  const std::string log = ReadTextFile(d / "reg" / "retention.jsonl");
  const auto j = json::parse(log.substr(0, log.find('\n')));
  EXPECT_EQ(j.size(), 4u);
  for (const char* key : {"timestamp", "label", "probabilities", "model_version"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(log.find("nonce-1234"), std::string::npos);
  EXPECT_LT(log.size(), 300u);
}

TEST_F(ServiceTest, ConcurrentIdenticalRequestsAgree) {
  ScreeningService svc(Options());
  svc.ActivateModel(trained_);
  LiveServer live(svc);
  const std::string upload = Png(testing::NoiseImage(150, 120, 9));
  std::vector<std::future<std::string>> futures;
  for (int i = 0; i < 8; ++i) {
    futures.push_back(std::async(std::launch::async, [&] {
      auto c = live.client();
      auto res = PostImage(c, upload);
      if (!res || res->status != 200) return std::string("error");
      auto j = json::parse(res->body);
      return j["label"].get<std::string>() + " " + j["probabilities"].dump();
    }));
  }
  const std::string first = futures[0].get();
  EXPECT_NE(first, "error");
  for (std::size_t i = 1; i < futures.size(); ++i) EXPECT_EQ(futures[i].get(), first);
}

TEST_F(ServiceTest, RedUploadScreensAsMonkeypox) {
  ScreeningService svc(Options());
  svc.ActivateModel(trained_);
  LiveServer live(svc);
  auto c = live.client();
  auto res = PostImage(c, Png(testing::SolidImage(300, 200, 230, 20, 20)));
  ASSERT_EQ(res->status, 200) << res->body;
  const auto j = json::parse(res->body);
  EXPECT_EQ(j["label"], "Monkeypox");
  EXPECT_GT(j["probabilities"]["Monkeypox"].get<double>(), 0.9);
  EXPECT_EQ(j["model_version"], trained_->version_tag);
}

}  // namespace
}  // namespace mpox
