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


#include "mpox/partitioning.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "mpox/codec.hpp"
#include "mpox/diag.hpp"
#include "mpox/error.hpp"
#include "mpox/hash.hpp"
#include "mpox/kv_config.hpp"
#include "mpox/random.hpp"

namespace mpox {
namespace {

constexpr std::string_view kPlanMagic = "# mpox-fold-plan";
constexpr std::string_view kAchievedTag = "# achieved";

struct PatientLoad {
  std::string patient_id;
  std::size_t originals = 0;
};

/// Assigns items (already in packing order) to the bin whose target
/// minus current fill is largest; ties go to the lower bin index.
std::vector<std::size_t> PackLargestDeficit(const std::vector<PatientLoad>& items,
                                            const std::vector<double>& targets) {
  std::vector<double> fill(targets.size(), 0.0);
  std::vector<std::size_t> bin_of(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < targets.size(); ++b) {
      if (targets[b] - fill[b] > targets[best] - fill[best]) best = b;
    }
    bin_of[i] = best;
    fill[best] += static_cast<double>(items[i].originals);
  }
  return bin_of;
}

/// Moves the smallest patient of the fullest donor bin into `empty_bin`.
/// `donors` lists bins allowed to give a patient up.
bool Rebalance(std::vector<std::size_t>& bin_of, const std::vector<PatientLoad>& items,
               std::size_t empty_bin, const std::vector<std::size_t>& donors) {
  std::vector<std::size_t> members(*std::max_element(donors.begin(), donors.end()) + 1, 0);
  for (std::size_t b : bin_of) {
    if (b < members.size()) ++members[b];
  }
  std::optional<std::size_t> donor;
  for (std::size_t d : donors) {
    if (members[d] >= 2 && (!donor || members[d] > members[*donor])) donor = d;
  }
  if (!donor) {
    // Fall back to any donor with a single member only if it is not a
    // bin we are trying to keep populated (pool bins qualify).
    for (std::size_t d : donors) {
      if (members[d] >= 1 && (!donor || members[d] > members[*donor])) donor = d;
    }
  }
  if (!donor) return false;
  // Items are ordered largest first, so the last member is the smallest.
  for (std::size_t i = items.size(); i-- > 0;) {
    if (bin_of[i] == *donor) {
      bin_of[i] = empty_bin;
      return true;
    }
  }
  return false;
}

std::size_t CountIn(const std::vector<std::size_t>& bin_of, std::size_t bin) {
  return static_cast<std::size_t>(std::count(bin_of.begin(), bin_of.end(), bin));
}

}  // namespace

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  Fail(ErrorCode::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

double ProportionRow::fraction(Split s) const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  const std::size_t k = s == Split::kTrain ? train : s == Split::kVal ? val : test;
  return static_cast<double>(k) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Planning

FoldPlan MakeFolds(const DatasetManifest& manifest, std::uint64_t seed, int num_folds) {
  manifest.Validate();
  FoldPlan plan;
  plan.seed = seed;
  if (num_folds < 2 || num_folds * plan.targets.test > 1.0 + 1e-9) {
    Fail(ErrorCode::kInvalidArgument,
         "num_folds must be in [2, 5] for a 20% test share, got " + std::to_string(num_folds));
  }
  const std::size_t k = static_cast<std::size_t>(num_folds);

  // patient -> (fold, split) decided per class.
  std::vector<std::map<std::string, Split>> split_of(k);
  for (ClassLabel label : kAllLabels) {
    std::vector<PatientLoad> patients;
    std::map<std::string, std::size_t> slot;
    for (const auto& e : manifest.entries()) {
      if (e.meta.label != label || e.meta.origin != Origin::kOriginal) continue;
      auto [it, inserted] = slot.emplace(e.meta.patient_id, patients.size());
      if (inserted) patients.push_back({e.meta.patient_id, 0});
      ++patients[it->second].originals;
    }
    if (patients.empty()) continue;
    if (patients.size() < k) {
      Fail(ErrorCode::kFailedPrecondition,
           "class " + std::string(LabelName(label)) + " has " + std::to_string(patients.size()) +
               " patients; at least " + std::to_string(k) + " are required");
    }

    Rng rng(DeriveSeed(seed, "make_folds", LabelName(label)));
    rng.Shuffle(std::span(patients));
    std::stable_sort(patients.begin(), patients.end(),
                     [](const PatientLoad& a, const PatientLoad& b) { return a.originals > b.originals; });

    double total = 0.0;
    for (const auto& p : patients) total += static_cast<double>(p.originals);
    if (static_cast<double>(patients.front().originals) > 0.5 * total) {
      Warn("partitioning", "class " + std::string(LabelName(label)) + ": patient " +
                               patients.front().patient_id +
                               " holds more than half of the images; split targets are unattainable");
    }

    // Bins 0..k-1 are the per-fold test groups, bin k is never tested.
    std::vector<double> test_targets(k + 1, plan.targets.test * total);
    test_targets[k] = total - plan.targets.test * total * static_cast<double>(k);
    auto test_bin = PackLargestDeficit(patients, test_targets);
    for (std::size_t b = 0; b < k; ++b) {
      if (CountIn(test_bin, b) == 0) {
        std::vector<std::size_t> donors;
        for (std::size_t d = 0; d <= k; ++d) {
          if (d != b) donors.push_back(d);
        }
        Rebalance(test_bin, patients, b, donors);
      }
    }

    for (std::size_t f = 0; f < k; ++f) {
      std::vector<PatientLoad> rest;
      double rest_total = 0.0;
      for (std::size_t i = 0; i < patients.size(); ++i) {
        if (test_bin[i] == f) {
          split_of[f][patients[i].patient_id] = Split::kTest;
        } else {
          rest.push_back(patients[i]);
          rest_total += static_cast<double>(patients[i].originals);
        }
      }
      const double val_target = plan.targets.val * total;
      auto tv_bin = PackLargestDeficit(rest, {rest_total - val_target, val_target});
      if (rest.size() >= 2 && CountIn(tv_bin, 1) == 0) Rebalance(tv_bin, rest, 1, {0});
      if (rest.size() >= 2 && CountIn(tv_bin, 0) == 0) Rebalance(tv_bin, rest, 0, {1});
      for (std::size_t i = 0; i < rest.size(); ++i) {
        split_of[f][rest[i].patient_id] = tv_bin[i] == 0 ? Split::kTrain : Split::kVal;
      }
    }
  }

  plan.folds.resize(k);
  for (std::size_t f = 0; f < k; ++f) {
    for (const auto& e : manifest.entries()) {
      auto it = split_of[f].find(e.meta.patient_id);
      if (it == split_of[f].end()) continue;  // patient without originals
      if (e.meta.origin == Origin::kAugmented && it->second == Split::kTest) continue;
      plan.folds[f].ids(it->second).push_back(e.meta.image_id);
    }
  }
  plan.achieved = ComputeProportions(plan, manifest);
  return plan;
}

FoldAssignment ResolveFold(const FoldPlan& plan, int fold, const DatasetManifest& manifest) {
  if (fold < 0 || fold >= static_cast<int>(plan.folds.size())) {
    Fail(ErrorCode::kOutOfRange, "fold " + std::to_string(fold) + " is not in the plan (" +
                                     std::to_string(plan.folds.size()) + " folds)");
  }
  FoldAssignment out = plan.folds[static_cast<std::size_t>(fold)];
  std::map<std::string, Split, std::less<>> listed;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (const auto& id : out.ids(s)) {
      manifest.Get(id);
      listed.emplace(id, s);
    }
  }
  for (const auto& e : manifest.entries()) {
    if (e.meta.origin != Origin::kAugmented || listed.count(e.meta.image_id) != 0) continue;
    auto parent = listed.find(*e.meta.parent_id);
    if (parent == listed.end() || parent->second == Split::kTest) continue;
    out.ids(parent->second).push_back(e.meta.image_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Audit

std::vector<ProportionRow> ComputeProportions(const FoldPlan& plan, const DatasetManifest& manifest) {
  std::vector<ProportionRow> rows;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    ProportionRow per_class[kNumClasses];
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      for (const auto& id : plan.folds[f].ids(s)) {
        const ManifestEntry* e = manifest.Find(id);
        if (e == nullptr || e->meta.origin != Origin::kOriginal) continue;
        auto& row = per_class[LabelIndex(e->meta.label)];
        (s == Split::kTrain ? row.train : s == Split::kVal ? row.val : row.test)++;
      }
    }
    for (ClassLabel label : kAllLabels) {
      auto row = per_class[LabelIndex(label)];
      if (row.total() == 0) continue;
      row.fold = static_cast<int>(f);
      row.label = label;
      rows.push_back(row);
    }
  }
  return rows;
}

AuditReport VerifyFoldPlan(const FoldPlan& plan, const DatasetManifest& manifest) {
  AuditReport report;
  std::map<std::string, std::set<std::size_t>> test_folds_of_patient;

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const std::string fold_tag = "fold " + std::to_string(f) + ": ";
    const auto& fold = plan.folds[f];
    std::map<std::string, Split, std::less<>> listed;
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      for (const auto& id : fold.ids(s)) {
        if (manifest.Find(id) == nullptr) {
          Fail(ErrorCode::kNotFound, fold_tag + "plan references image_id " + id +
                                         " which is not in the manifest");
        }
        auto [it, inserted] = listed.emplace(id, s);
        if (!inserted) {
          report.coverage_errors.push_back(fold_tag + id + " listed in both " +
                                           std::string(SplitName(it->second)) + " and " +
                                           std::string(SplitName(s)));
        }
      }
    }

    std::map<std::string, std::set<Split>> splits_of_patient;
    for (const auto& [id, split] : listed) {
      const ManifestEntry& e = manifest.Get(id);
      splits_of_patient[e.meta.patient_id].insert(split);
      if (split == Split::kTest) test_folds_of_patient[e.meta.patient_id].insert(f);
      if (e.meta.origin != Origin::kAugmented) continue;
      if (split == Split::kTest) report.augmented_in_test.push_back(fold_tag + id);
      auto parent = listed.find(*e.meta.parent_id);
      if (parent == listed.end()) {
        report.parent_child_mismatches.push_back(fold_tag + id + " listed in " +
                                                 std::string(SplitName(split)) +
                                                 " but parent " + *e.meta.parent_id + " is unassigned");
      } else if (parent->second != split) {
        report.parent_child_mismatches.push_back(
            fold_tag + id + " in " + std::string(SplitName(split)) + " but parent " +
            parent->first + " in " + std::string(SplitName(parent->second)));
      }
    }
    for (const auto& [patient, splits] : splits_of_patient) {
      if (splits.size() < 2) continue;
      std::string names;
      for (Split s : splits) {
        if (!names.empty()) names += ',';
        names += SplitName(s);
      }
      report.patient_overlaps.push_back(fold_tag + "patient " + patient + " spans " + names);
    }
    for (const auto& e : manifest.entries()) {
      if (e.meta.origin == Origin::kOriginal && listed.count(e.meta.image_id) == 0) {
        report.coverage_errors.push_back(fold_tag + "original " + e.meta.image_id + " is unassigned");
      }
    }
  }
  for (const auto& [patient, folds] : test_folds_of_patient) {
    if (folds.size() < 2) continue;
    std::string names;
    for (std::size_t f : folds) {
      if (!names.empty()) names += ',';
      names += std::to_string(f);
    }
    report.cross_fold_test_overlaps.push_back("patient " + patient + " tested in folds " + names);
  }
  report.proportions = ComputeProportions(plan, manifest);
  return report;
}

std::string AuditReport::Format() const {
  std::ostringstream out;
  const auto section = [&](std::string_view name, const std::vector<std::string>& items) {
    out << name << '\t' << items.size() << '\n';
    for (const auto& item : items) out << "  " << item << '\n';
  };
  section("patient_overlap_violations", patient_overlaps);
  section("augmented_in_test_violations", augmented_in_test);
  section("parent_child_mismatches", parent_child_mismatches);
  section("cross_fold_test_overlaps", cross_fold_test_overlaps);
  section("coverage_errors", coverage_errors);
  out << "fold\tclass\ttrain\tval\ttest\ttrain_frac\tval_frac\ttest_frac\n";
  char buf[128];
  for (const auto& r : proportions) {
    std::snprintf(buf, sizeof(buf), "%d\t%s\t%zu\t%zu\t%zu\t%.4f\t%.4f\t%.4f\n", r.fold,
                  std::string(LabelName(r.label)).c_str(), r.train, r.val, r.test,
                  r.fraction(Split::kTrain), r.fraction(Split::kVal), r.fraction(Split::kTest));
    out << buf;
  }
  out << "status\t" << (ok() ? "ok" : "violations") << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Persistence

std::string FoldPlan::Serialize() const {
  std::ostringstream out;
  out << kPlanMagic << " folds=" << folds.size() << " seed=" << seed
      << " targets=" << FormatDouble(targets.train) << ',' << FormatDouble(targets.val) << ','
      << FormatDouble(targets.test) << '\n';
  out << "# fold_index\tsplit_name\timage_id\n";
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      for (const auto& id : folds[f].ids(s)) out << f << '\t' << SplitName(s) << '\t' << id << '\n';
    }
  }
  if (!achieved.empty()) {
    out << kAchievedTag << "\tfold\tclass\ttrain\tval\ttest\ttest_fraction\n";
    char buf[32];
    for (const auto& r : achieved) {
      std::snprintf(buf, sizeof(buf), "%.4f", r.fraction(Split::kTest));
      out << kAchievedTag << '\t' << r.fold << '\t' << LabelName(r.label) << '\t' << r.train
          << '\t' << r.val << '\t' << r.test << '\t' << buf << '\n';
    }
  }
  return out.str();
}

FoldPlan FoldPlan::Parse(std::string_view text, std::string_view origin) {
  FoldPlan plan;
  bool saw_header = false;
  std::size_t line_no = 0;
  const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no) + ": "; };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.starts_with(kPlanMagic)) {
      std::istringstream header(line.substr(kPlanMagic.size()));
      std::string token;
      while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        try {
          if (key == "folds") plan.folds.resize(std::stoul(value));
          else if (key == "seed") plan.seed = std::stoull(value);
          else if (key == "targets") {
            auto kv = KeyValueConfig::Parse("t = " + value);
            auto t = kv.GetDoubleList("t");
            if (t.size() != 3) throw std::invalid_argument(value);
            plan.targets = {t[0], t[1], t[2]};
          }
        } catch (const std::exception&) {
          Fail(ErrorCode::kDataLoss, where() + "bad header field " + token);
        }
      }
      saw_header = true;
      continue;
    }
    if (line.front() == '#') {
      if (line.starts_with(kAchievedTag) && line.find("\tfold\t") == std::string::npos) {
        std::istringstream row(line.substr(kAchievedTag.size()));
        ProportionRow r;
        std::string label;
        double frac = 0.0;
        if (row >> r.fold >> label >> r.train >> r.val >> r.test >> frac) {
          r.label = ParseLabel(label);
          plan.achieved.push_back(r);
        }
      }
      continue;
    }
    if (!saw_header) Fail(ErrorCode::kDataLoss, where() + "missing fold-plan header");
    std::istringstream row(line);
    std::size_t fold = 0;
    std::string split, id, extra;
    if (!(row >> fold >> split >> id) || (row >> extra)) {
      Fail(ErrorCode::kDataLoss, where() + "expected 'fold_index<TAB>split_name<TAB>image_id'");
    }
    if (fold >= plan.folds.size()) {
      Fail(ErrorCode::kDataLoss, where() + "fold index " + std::to_string(fold) + " out of range");
    }
    try {
      plan.folds[fold].ids(ParseSplit(split)).push_back(id);
    } catch (const Error& e) {
      Fail(ErrorCode::kDataLoss, where() + e.what());
    }
  }
  if (!saw_header) Fail(ErrorCode::kDataLoss, std::string(origin) + ": missing fold-plan header");
  return plan;
}

FoldPlan FoldPlan::Read(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const Error&) {
    Fail(ErrorCode::kNotFound, "fold plan not found: " + path.string());
  }
  return Parse(text, path.string());
}

void FoldPlan::Write(const std::filesystem::path& path) const { WriteTextFile(path, Serialize()); }

}  // namespace mpox
