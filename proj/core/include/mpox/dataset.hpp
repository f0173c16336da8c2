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

#ifndef MPOX_DATASET_HPP_
#define MPOX_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mpox/image.hpp"

namespace mpox {

inline constexpr int kImageSide = 224;

enum class ClassLabel { kMonkeypox, kOthers };

inline constexpr std::size_t kNumClasses = 2;
inline constexpr ClassLabel kAllLabels[kNumClasses] = {ClassLabel::kMonkeypox,
                                                       ClassLabel::kOthers};

/// "Monkeypox" or "Others".
std::string_view LabelName(ClassLabel label);
ClassLabel ParseLabel(std::string_view name);
inline std::size_t LabelIndex(ClassLabel label) { return static_cast<std::size_t>(label); }

enum class Origin { kOriginal, kAugmented };

std::string_view OriginName(Origin origin);
Origin ParseOrigin(std::string_view name);

/// Identity and provenance of one dataset image.
struct ImageMeta {
  std::string image_id;
  std::string patient_id;
  ClassLabel label = ClassLabel::kMonkeypox;
  Origin origin = Origin::kOriginal;
  std::optional<std::string> parent_id;       // iff augmented
  std::optional<std::string> transform_name;  // iff augmented
  std::string source_note;

  friend bool operator==(const ImageMeta&, const ImageMeta&) = default;
};

struct LesionImage {
  ImageMeta meta;
  Image pixels;
};

/// Throws unless ids are path-safe, pixels are 224x224 RGB and the
/// origin/parent/transform fields agree.
void ValidateLesionImage(const LesionImage& image);

/// Ids become path segments, so only [A-Za-z0-9._-] is accepted.
bool IsValidId(std::string_view id);

struct ManifestEntry {
  ImageMeta meta;
  std::string relative_path;  // relative to the manifest's directory

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Ordered image catalog. Pixel payloads live in files next to the
/// manifest; `base_dir` resolves their relative paths and is not persisted.
class DatasetManifest {
 public:
  static constexpr int kSchemaVersion = 1;

  DatasetManifest() = default;
  explicit DatasetManifest(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

  static DatasetManifest Read(const std::filesystem::path& path);
  void Write(const std::filesystem::path& path) const;

  /// Tab-separated text; see README for the column layout.
  std::string Serialize() const;
  static DatasetManifest Parse(std::string_view text, std::filesystem::path base_dir,
                               std::string_view origin = "<manifest>");

  void Add(ManifestEntry entry);
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const ManifestEntry* Find(std::string_view image_id) const;
  const ManifestEntry& Get(std::string_view image_id) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }
  std::filesystem::path ResolvePath(const ManifestEntry& entry) const;

  /// Checks unique ids, one label per patient, and parent links of
  /// augmented entries. Throws naming the offending id.
  void Validate() const;

  int schema_version() const { return schema_version_; }

 private:
  int schema_version_ = kSchemaVersion;
  std::filesystem::path base_dir_;
  std::vector<ManifestEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Loads pixels for manifest entries. Training and the duplicate scan go
/// through this interface so tests can observe every read.
class PixelSource {
 public:
  virtual ~PixelSource() = default;
  virtual Image Load(const DatasetManifest& manifest, const ManifestEntry& entry) = 0;
};

class FilePixelSource final : public PixelSource {
 public:
  Image Load(const DatasetManifest& manifest, const ManifestEntry& entry) override;
};

struct IngestMeta {
  std::string image_id;
  std::string patient_id;
  ClassLabel label = ClassLabel::kMonkeypox;
  std::string source_note;
};

/// Crops `roi`, pads to a square by edge replication and resamples to
/// 224x224 bilinearly. The padding applied is appended to source_note.
LesionImage IngestImage(const Image& raw, const Rect& roi, const IngestMeta& meta);

/// Decodes `encoded` first; undecodable bytes are rejected.
LesionImage IngestEncoded(std::span<const std::uint8_t> encoded, const Rect& roi,
                          const IngestMeta& meta);

/// Checks roi placement against an image of the given size.
void ValidateRoi(const Rect& roi, int width, int height);

/// Path of a payload inside a dataset tree: images/<label>/<patient>/<id>.png
std::filesystem::path PayloadRelativePath(const ImageMeta& meta);

/// Writes the PNG payload under `manifest_dir` and returns its entry.
ManifestEntry StoreImage(const LesionImage& image, const std::filesystem::path& manifest_dir);

struct ClassCounts {
  std::size_t original_images = 0;
  std::size_t unique_patients = 0;
  std::size_t augmented_images = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct CountsSummary {
  ClassCounts per_class[kNumClasses];
  ClassCounts total;

  const ClassCounts& of(ClassLabel label) const { return per_class[LabelIndex(label)]; }
};

CountsSummary Summarize(const DatasetManifest& manifest);

std::string FormatCountsTable(const CountsSummary& summary);

}  // namespace mpox

#endif  // MPOX_DATASET_HPP_
