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


#include <algorithm>
#include <ctime>
#include <map>
#include <sstream>
#include <system_error>

#include "mpox/codec.hpp"
#include "mpox/error.hpp"
#include "mpox/kv_config.hpp"
#include "mpox/service/screening_service.hpp"

namespace mpox {
namespace {

std::string FileTimeUtc(const std::filesystem::path& path) {
  std::error_code ec;
  const auto ft = std::filesystem::last_write_time(path, ec);
  if (ec) return "";
  const auto sys = std::chrono::file_clock::to_sys(ft);
  const std::time_t t = std::chrono::system_clock::to_time_t(sys);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<ModelRegistry::Entry> ModelRegistry::List() const {
  std::vector<Entry> out;
  std::error_code ec;
  std::filesystem::directory_iterator it(root_, ec);
  if (ec) {
    Fail(ErrorCode::kInternal, "cannot read model registry " + root_.string() + ": " + ec.message());
  }
  for (const auto& dirent : it) {
    const auto meta_path = dirent.path() / "meta.cfg";
    if (!dirent.is_directory() || !std::filesystem::exists(meta_path)) continue;
    try {
      const auto meta = KeyValueConfig::Load(meta_path);
      Entry e;
      e.version_tag = meta.GetString("version_tag");
      e.backbone_id = meta.GetString("backbone_id");
      e.name = meta.Has("name") ? meta.GetString("name") : e.backbone_id;
      e.fold_index = static_cast<int>(meta.GetInt("fold_index"));
      e.created = FileTimeUtc(dirent.path() / "weights.bin");
      e.dir = dirent.path();
      out.push_back(std::move(e));
    } catch (const Error& err) {
      Fail(ErrorCode::kInternal, "cannot read model registry entry " + meta_path.string() + ": " +
                                     err.what());
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Entry& a, const Entry& b) { return a.version_tag < b.version_tag; });
  return out;
}

std::optional<std::string> ModelRegistry::DefaultVersion() const {
  const auto entries = List();
  if (entries.empty()) return std::nullopt;
  if (!std::filesystem::exists(report_)) return entries.front().version_tag;

  std::map<std::pair<std::string, int>, double> accuracy;
  std::istringstream in(ReadTextFile(report_));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    std::string network, scope, fold;
    double acc = 0.0;
    if (!(f >> network >> scope >> fold >> acc) || scope != "positive") continue;
    if (fold.empty() || !std::all_of(fold.begin(), fold.end(), ::isdigit)) continue;
    accuracy[{network, std::stoi(fold)}] = acc;
  }
  const Entry* best = nullptr;
  double best_acc = -1.0;
  for (const auto& e : entries) {
    auto it = accuracy.find({e.name, e.fold_index});
    if (it != accuracy.end() && it->second > best_acc) {
      best_acc = it->second;
      best = &e;
    }
  }
  return best != nullptr ? best->version_tag : entries.front().version_tag;
}

std::shared_ptr<const TrainedModel> ModelRegistry::Load(std::string_view version_tag) const {
  for (const auto& e : List()) {
    if (e.version_tag == version_tag) {
      return std::make_shared<const TrainedModel>(TrainedModel::Load(e.dir));
    }
  }
  Fail(ErrorCode::kNotFound, "model version '" + std::string(version_tag) + "' is not registered");
}

}  // namespace mpox
