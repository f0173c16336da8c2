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

#ifndef MPOX_DIAG_HPP_
#define MPOX_DIAG_HPP_

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace mpox {

enum class Severity { kInfo, kWarning };

/// Receives diagnostics emitted by library code. `topic` is a short
/// machine-friendly tag such as "dedup" or "metrics".
using DiagnosticSink =
    std::function<void(Severity, std::string_view topic, std::string_view message)>;

/// Installs a process-wide sink and returns the previous one. The default
/// sink writes "warning [topic] message" lines to stderr.
DiagnosticSink SetDiagnosticSink(DiagnosticSink sink);

void Warn(std::string_view topic, std::string_view message);
void Info(std::string_view topic, std::string_view message);

/// Captures diagnostics for the lifetime of the object (tests, services).
class ScopedDiagnosticCapture {
 public:
  struct Entry {
    Severity severity;
    std::string topic;
    std::string message;
  };

  ScopedDiagnosticCapture();
  ~ScopedDiagnosticCapture();
  ScopedDiagnosticCapture(const ScopedDiagnosticCapture&) = delete;
  ScopedDiagnosticCapture& operator=(const ScopedDiagnosticCapture&) = delete;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t warnings() const;

 private:
  std::vector<Entry> entries_;
  DiagnosticSink previous_;
};

}  // namespace mpox

#endif  // MPOX_DIAG_HPP_
