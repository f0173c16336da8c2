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

#ifndef MPOX_KV_CONFIG_HPP_
#define MPOX_KV_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpox {

/// Flat "key = value" text config. Blank lines and lines starting with '#'
/// are ignored; keys are unique. Serialization preserves insertion order.
class KeyValueConfig {
 public:
  static KeyValueConfig Parse(std::string_view text, std::string_view origin = "<config>");
  static KeyValueConfig Load(const std::filesystem::path& path);

  bool Has(std::string_view key) const;
  std::optional<std::string> Find(std::string_view key) const;

  std::string GetString(std::string_view key) const;
  double GetDouble(std::string_view key) const;
  std::int64_t GetInt(std::string_view key) const;
  std::uint64_t GetU64(std::string_view key) const;
  bool GetBool(std::string_view key) const;
  std::vector<double> GetDoubleList(std::string_view key) const;

  void Set(std::string_view key, std::string value);

  /// Rejects keys outside the known set so typos do not silently fall back to
  /// defaults.
  void RejectUnknownKeys(std::initializer_list<std::string_view> known) const;

  std::string Serialize() const;

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_ = "<config>";
  std::vector<std::string> order_;
  std::map<std::string, std::string, std::less<>> values_;
};

/// Shortest round-trippable decimal rendering of a double.
std::string FormatDouble(double value);

}  // namespace mpox

#endif  // MPOX_KV_CONFIG_HPP_
