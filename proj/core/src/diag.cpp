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

#include "mpox/diag.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace mpox {
namespace {

std::mutex& SinkMutex() {
  static std::mutex mu;
  return mu;
}

void StderrSink(Severity severity, std::string_view topic,
                std::string_view message) {
  std::cerr << (severity == Severity::kWarning ? "warning" : "info") << " ["
            << topic << "] " << message << '\n';
}

DiagnosticSink& CurrentSink() {
  static DiagnosticSink sink = StderrSink;
  return sink;
}

void Emit(Severity severity, std::string_view topic, std::string_view message) {
  std::lock_guard<std::mutex> lock(SinkMutex());
  if (CurrentSink()) CurrentSink()(severity, topic, message);
}

}  // namespace

DiagnosticSink SetDiagnosticSink(DiagnosticSink sink) {
  std::lock_guard<std::mutex> lock(SinkMutex());
  return std::exchange(CurrentSink(), std::move(sink));
}

void Warn(std::string_view topic, std::string_view message) {
  Emit(Severity::kWarning, topic, message);
}

void Info(std::string_view topic, std::string_view message) {
  Emit(Severity::kInfo, topic, message);
}

ScopedDiagnosticCapture::ScopedDiagnosticCapture() {
  previous_ = SetDiagnosticSink(
      [this](Severity s, std::string_view topic, std::string_view message) {
        entries_.push_back({s, std::string(topic), std::string(message)});
      });
}

ScopedDiagnosticCapture::~ScopedDiagnosticCapture() {
  SetDiagnosticSink(std::move(previous_));
}

std::size_t ScopedDiagnosticCapture::warnings() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.severity == Severity::kWarning;
  return n;
}

}  // namespace mpox
