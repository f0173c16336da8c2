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


#include "mpox/dedup.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <optional>

#include "mpox/codec.hpp"
#include "mpox/diag.hpp"
#include "mpox/error.hpp"
#include "mpox/hash.hpp"

namespace mpox {
namespace {

constexpr int kGridW = 9;
constexpr int kGridH = 8;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    // Smaller index wins, which keeps the representative deterministic.
    if (a < b) parent_[b] = a;
    else if (b < a) parent_[a] = b;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Fingerprint {
  std::uint64_t content = 0;
  std::uint64_t dhash = 0;
};

bool SameBytes(const DatasetManifest& manifest, const ManifestEntry& a,
               const ManifestEntry& b) {
  try {
    return ReadFileBytes(manifest.ResolvePath(a)) == ReadFileBytes(manifest.ResolvePath(b));
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::uint64_t DifferenceHash(const Image& image) {
  if (image.empty()) Fail(ErrorCode::kInvalidArgument, "cannot hash an empty image");
  double grid[kGridH][kGridW] = {};
  for (int gy = 0; gy < kGridH; ++gy) {
    const int y0 = gy * image.height() / kGridH;
    const int y1 = std::max(y0 + 1, (gy + 1) * image.height() / kGridH);
    for (int gx = 0; gx < kGridW; ++gx) {
      const int x0 = gx * image.width() / kGridW;
      const int x1 = std::max(x0 + 1, (gx + 1) * image.width() / kGridW);
      double sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sum += Luma(image, x, y);
      }
      grid[gy][gx] = sum / ((y1 - y0) * (x1 - x0));
    }
  }
  std::uint64_t bits = 0;
  for (int gy = 0; gy < kGridH; ++gy) {
    for (int gx = 0; gx < kGridW - 1; ++gx) {
      bits = (bits << 1) | (grid[gy][gx] > grid[gy][gx + 1] ? 1u : 0u);
    }
  }
  return bits;
}

int HammingDistance(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

DuplicateReport DetectDuplicates(const DatasetManifest& manifest, int threshold) {
  if (manifest.empty()) Fail(ErrorCode::kFailedPrecondition, "manifest is empty");
  if (threshold < 0) Fail(ErrorCode::kInvalidArgument, "threshold must be >= 0");

  DuplicateReport report;
  const auto& entries = manifest.entries();
  std::vector<std::optional<Fingerprint>> prints(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      const auto bytes = ReadFileBytes(manifest.ResolvePath(entries[i]));
      prints[i] = Fingerprint{StableHasher().AddBytes(bytes).Digest(),
                              DifferenceHash(DecodeImage(bytes))};
    } catch (const Error& e) {
      Warn("dedup", "skipping " + entries[i].meta.image_id + ": " + e.what());
      report.skipped.push_back(entries[i].meta.image_id);
    }
  }

  DisjointSets sets(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!prints[i]) continue;
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (!prints[j]) continue;
      const bool identical = prints[i]->content == prints[j]->content &&
                             SameBytes(manifest, entries[i], entries[j]);
      if (identical || HammingDistance(prints[i]->dhash, prints[j]->dhash) <= threshold) {
        sets.Union(i, j);
      }
    }
  }

  std::map<std::size_t, std::vector<std::string>> by_root;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (prints[i]) by_root[sets.Find(i)].push_back(entries[i].meta.image_id);
  }
  for (auto& [root, members] : by_root) {
    if (members.size() > 1) report.groups.push_back(std::move(members));
  }
  return report;
}

std::string FormatDuplicateReport(const DuplicateReport& report) {
  std::string out = "# group_index\timage_id\n";
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    for (const auto& id : report.groups[g]) {
      out += std::to_string(g);
      out += '\t';
      out += id;
      out += '\n';
    }
  }
  for (const auto& id : report.skipped) {
    out += "# skipped\t";
    out += id;
    out += '\n';
  }
  return out;
}

}  // namespace mpox
