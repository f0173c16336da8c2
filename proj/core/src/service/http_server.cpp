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


#include "mpox/service/http_server.hpp"

#include <charconv>
#include <optional>

#include <httplib.h>
#include <json.hpp>

#include "mpox/diag.hpp"

namespace mpox {
namespace {

using nlohmann::json;

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, ErrorCode code, const std::string& message) {
  SendJson(res, HttpStatusFor(code),
           {{"error", std::string(ErrorCodeName(code))}, {"message", message}});
}

/// Form field or query parameter.
std::optional<std::string> Field(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  return std::nullopt;
}

int ParseCoordinate(const std::string& key, const std::string& text) {
  int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    Fail(ErrorCode::kInvalidArgument, "roi field '" + key + "' is not an integer");
  }
  return v;
}

std::optional<Rect> ParseRoi(const httplib::Request& req) {
  const char* keys[4] = {"x", "y", "w", "h"};
  std::optional<std::string> values[4];
  int present = 0;
  for (int i = 0; i < 4; ++i) {
    values[i] = Field(req, keys[i]);
    present += values[i].has_value() ? 1 : 0;
  }
  if (present == 0) return std::nullopt;
  if (present != 4) Fail(ErrorCode::kInvalidArgument, "roi needs all of x, y, w, h");
  return Rect{ParseCoordinate("x", *values[0]), ParseCoordinate("y", *values[1]),
              ParseCoordinate("w", *values[2]), ParseCoordinate("h", *values[3])};
}

template <typename F>
void Guard(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    SendError(res, e.code(), e.what());
  } catch (const std::exception& e) {
    SendError(res, ErrorCode::kInternal, e.what());
  }
}

}  // namespace

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kOutOfRange: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kFailedPrecondition: return 409;
    case ErrorCode::kPayloadTooLarge: return 413;
    case ErrorCode::kUnsupportedMedia: return 415;
    case ErrorCode::kUnavailable: return 503;
    case ErrorCode::kDataLoss:
    case ErrorCode::kInternal: return 500;
  }
  return 500;
}

struct HttpServer::Impl {
  ScreeningService& service;
  httplib::Server server;

  explicit Impl(ScreeningService& s) : service(s) {}
};

HttpServer::HttpServer(ScreeningService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  ScreeningService& svc = service;
  // Leave headroom for multipart framing; the service enforces the exact
  // image size limit itself.
  srv.set_payload_max_length(svc.options().max_payload + (1u << 20));

  srv.Post("/api/v1/predict", [&svc](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      if (!req.has_file("image")) {
        Fail(ErrorCode::kInvalidArgument, "multipart field 'image' is required");
      }
      const auto file = req.get_file_value("image");
      ScreeningRequest r;
      r.payload.assign(file.content.begin(), file.content.end());
      r.roi = ParseRoi(req);
      if (auto nonce = Field(req, "client_nonce")) r.client_nonce = *nonce;
      const ScreeningResponse out = svc.Predict(r);
      SendJson(res, 200,
               {{"label", std::string(LabelName(out.label))},
                {"probabilities",
                 {{"Monkeypox", out.probabilities[0]}, {"Others", out.probabilities[1]}}},
                {"model_version", out.model_version},
                {"guidance", out.guidance},
                {"latency_ms", out.latency_ms}});
    });
  });

  srv.Get("/api/v1/health", [&svc](const httplib::Request&, httplib::Response& res) {
    Guard(res, [&] {
      const HealthStatus h = svc.Health();
      SendJson(res, 200,
               {{"status", h.ok ? "ok" : "degraded"},
                {"model_version", h.model_version ? json(*h.model_version) : json(nullptr)},
                {"uptime_s", h.uptime_s}});
    });
  });

  srv.Get("/api/v1/models", [&svc](const httplib::Request&, httplib::Response& res) {
    Guard(res, [&] {
      json models = json::array();
      for (const auto& m : svc.Models()) {
        models.push_back({{"version_tag", m.entry.version_tag},
                          {"name", m.entry.name},
                          {"backbone_id", m.entry.backbone_id},
                          {"fold_index", m.entry.fold_index},
                          {"created", m.entry.created},
                          {"active", m.active}});
      }
      SendJson(res, 200, {{"models", models}});
    });
  });

  srv.Post(R"(/api/v1/models/([^/]+)/activate)",
           [&svc](const httplib::Request& req, httplib::Response& res) {
             Guard(res, [&] {
               const std::string version = req.matches[1];
               svc.Activate(version);
               SendJson(res, 200, {{"active", version}});
             });
           });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 413) {
      SendError(res, ErrorCode::kPayloadTooLarge, "request body exceeds the upload limit");
    } else if (res.status == 404) {
      SendError(res, ErrorCode::kNotFound, "no such endpoint");
    }
  });
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) Fail(ErrorCode::kUnavailable, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    Fail(ErrorCode::kUnavailable, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::Serve() { impl_->server.listen_after_bind(); }

void HttpServer::WaitUntilReady() const { impl_->server.wait_until_ready(); }

void HttpServer::Stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace mpox
