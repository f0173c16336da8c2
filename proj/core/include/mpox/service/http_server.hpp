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


#ifndef MPOX_SERVICE_HTTP_SERVER_HPP_
#define MPOX_SERVICE_HTTP_SERVER_HPP_

#include <memory>
#include <string>

#include "mpox/error.hpp"
#include "mpox/service/screening_service.hpp"

namespace mpox {

/// HTTP/JSON front end:
///   POST /api/v1/predict                     multipart "image", optional x,y,w,h
///   GET  /api/v1/health
///   GET  /api/v1/models
///   POST /api/v1/models/{version}/activate
class HttpServer {
 public:
  explicit HttpServer(ScreeningService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to host:port (port 0 picks a free one) and returns the port.
  int Bind(const std::string& host, int port);

  /// Serves until Stop(); call after Bind.
  void Serve();

  /// Blocks until the server accepts connections.
  void WaitUntilReady() const;

  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error code.
int HttpStatusFor(ErrorCode code);

}  // namespace mpox

#endif  // MPOX_SERVICE_HTTP_SERVER_HPP_
