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

#include "mpox/kv_config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "mpox/codec.hpp"
#include "mpox/error.hpp"

namespace mpox {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(std::string_view text, std::string_view origin) {
  KeyValueConfig cfg;
  cfg.origin_ = std::string(origin);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = Trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      Fail(ErrorCode::kInvalidArgument, cfg.origin_ + ":" + std::to_string(line_no) +
                                            ": expected 'key = value'");
    }
    std::string key(Trim(line.substr(0, eq)));
    std::string value(Trim(line.substr(eq + 1)));
    if (key.empty()) {
      Fail(ErrorCode::kInvalidArgument, cfg.origin_ + ":" + std::to_string(line_no) + ": empty key");
    }
    if (cfg.values_.count(key) != 0) {
      Fail(ErrorCode::kInvalidArgument, cfg.origin_ + ":" + std::to_string(line_no) +
                                            ": duplicate key '" + key + "'");
    }
    cfg.order_.push_back(key);
    cfg.values_.emplace(std::move(key), std::move(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::Load(const std::filesystem::path& path) {
  return Parse(ReadTextFile(path), path.string());
}

bool KeyValueConfig::Has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> KeyValueConfig::Find(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::GetString(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    Fail(ErrorCode::kInvalidArgument, origin_ + ": missing key '" + std::string(key) + "'");
  }
  return it->second;
}

double KeyValueConfig::GetDouble(std::string_view key) const {
  const std::string v = GetString(key);
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  Fail(ErrorCode::kInvalidArgument,
       origin_ + ": key '" + std::string(key) + "' is not a number: " + v);
}

std::int64_t KeyValueConfig::GetInt(std::string_view key) const {
  const std::string v = GetString(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    Fail(ErrorCode::kInvalidArgument,
         origin_ + ": key '" + std::string(key) + "' is not an integer: " + v);
  }
  return out;
}

std::uint64_t KeyValueConfig::GetU64(std::string_view key) const {
  const std::string v = GetString(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    Fail(ErrorCode::kInvalidArgument,
         origin_ + ": key '" + std::string(key) + "' is not an unsigned integer: " + v);
  }
  return out;
}

bool KeyValueConfig::GetBool(std::string_view key) const {
  const std::string v = GetString(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  Fail(ErrorCode::kInvalidArgument,
       origin_ + ": key '" + std::string(key) + "' is not a boolean: " + v);
}

std::vector<double> KeyValueConfig::GetDoubleList(std::string_view key) const {
  const std::string v = GetString(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = Trim(item);
    if (t.empty()) continue;
    try {
      std::size_t used = 0;
      std::string s(t);
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      Fail(ErrorCode::kInvalidArgument,
           origin_ + ": key '" + std::string(key) + "' has a non-numeric item: " + std::string(t));
    }
  }
  return out;
}

void KeyValueConfig::Set(std::string_view key, std::string value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    order_.emplace_back(key);
    values_.emplace(std::string(key), std::move(value));
  } else {
    it->second = std::move(value);
  }
}

void KeyValueConfig::RejectUnknownKeys(std::initializer_list<std::string_view> known) const {
  for (const auto& key : order_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      Fail(ErrorCode::kInvalidArgument, origin_ + ": unknown key '" + key + "'");
    }
  }
}

std::string KeyValueConfig::Serialize() const {
  std::string out;
  for (const auto& key : order_) {
    out += key;
    out += " = ";
    out += values_.find(key)->second;
    out += '\n';
  }
  return out;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace mpox
