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


#ifndef MPOX_PARTITIONING_HPP_
#define MPOX_PARTITIONING_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mpox/dataset.hpp"

namespace mpox {

enum class Split { kTrain, kVal, kTest };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct FoldAssignment {
  std::vector<std::string> train;  // originals + augmented children
  std::vector<std::string> val;    // originals + augmented children
  std::vector<std::string> test;   // originals only

  const std::vector<std::string>& ids(Split s) const {
    return s == Split::kTrain ? train : s == Split::kVal ? val : test;
  }
  std::vector<std::string>& ids(Split s) {
    return s == Split::kTrain ? train : s == Split::kVal ? val : test;
  }

  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

/// Original-image counts of one class within one fold.
struct ProportionRow {
  int fold = 0;
  ClassLabel label = ClassLabel::kMonkeypox;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  double fraction(Split s) const;
  std::size_t total() const { return train + val + test; }

  friend bool operator==(const ProportionRow&, const ProportionRow&) = default;
};

struct SplitTargets {
  double train = 0.70;
  double val = 0.10;
  double test = 0.20;

  friend bool operator==(const SplitTargets&, const SplitTargets&) = default;
};

struct FoldPlan {
  std::uint64_t seed = 0;
  SplitTargets targets;
  std::vector<FoldAssignment> folds;
  /// Filled by MakeFolds; informational when read back from disk.
  std::vector<ProportionRow> achieved;

  std::string Serialize() const;
  static FoldPlan Parse(std::string_view text, std::string_view origin = "<plan>");
  static FoldPlan Read(const std::filesystem::path& path);
  void Write(const std::filesystem::path& path) const;
};

inline constexpr int kDefaultFolds = 3;

/// Patient-disjoint folds. Per class, patients are shuffled with the seed
/// and packed (largest first, into the bin with the largest remaining
/// deficit) into `num_folds` disjoint test groups of ~20% of the class's
/// originals; the other patients of each fold are packed into train/val
/// at ~70:10. Augmented children follow their parent.
FoldPlan MakeFolds(const DatasetManifest& manifest, std::uint64_t seed,
                   int num_folds = kDefaultFolds);

/// The plan's fold with augmented children of train/val originals that the
/// plan does not list added to their parent's split. This is what lets a
/// plan made from originals drive training on the expanded manifest.
FoldAssignment ResolveFold(const FoldPlan& plan, int fold, const DatasetManifest& manifest);

struct AuditReport {
  std::vector<std::string> patient_overlaps;
  std::vector<std::string> augmented_in_test;
  std::vector<std::string> parent_child_mismatches;
  std::vector<std::string> cross_fold_test_overlaps;
  std::vector<std::string> coverage_errors;
  std::vector<ProportionRow> proportions;

  bool ok() const {
    return patient_overlaps.empty() && augmented_in_test.empty() &&
           parent_child_mismatches.empty() && cross_fold_test_overlaps.empty() &&
           coverage_errors.empty();
  }
  std::string Format() const;
};

/// Checks patient independence, test purity, parent/child agreement,
/// cross-fold test disjointness and original coverage. Throws
/// Error(kNotFound) naming the first plan id missing from the manifest.
AuditReport VerifyFoldPlan(const FoldPlan& plan, const DatasetManifest& manifest);

std::vector<ProportionRow> ComputeProportions(const FoldPlan& plan, const DatasetManifest& manifest);

}  // namespace mpox

#endif  // MPOX_PARTITIONING_HPP_
