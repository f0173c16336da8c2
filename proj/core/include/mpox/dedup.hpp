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


#ifndef MPOX_DEDUP_HPP_
#define MPOX_DEDUP_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mpox/dataset.hpp"

namespace mpox {

/// 64-bit difference hash: the image is reduced to a 9x8 luma grid by
/// box averaging and each bit records whether a cell is brighter than its
/// right-hand neighbour.
std::uint64_t DifferenceHash(const Image& image);

int HammingDistance(std::uint64_t a, std::uint64_t b);

struct DuplicateReport {
  /// Each group lists >= 2 image_ids in manifest order; groups are ordered
  /// by their first member.
  std::vector<std::vector<std::string>> groups;
  /// Images whose payload could not be read or decoded.
  std::vector<std::string> skipped;
};

/// Groups images whose hash distance is <= threshold, plus any byte-identical
/// payloads. Grouping is transitive. Read-only on the manifest and files.
DuplicateReport DetectDuplicates(const DatasetManifest& manifest, int threshold);

std::string FormatDuplicateReport(const DuplicateReport& report);

}  // namespace mpox

#endif  // MPOX_DEDUP_HPP_
