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

#include "mpox/dataset.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "mpox/codec.hpp"
#include "mpox/error.hpp"

namespace mpox {
namespace {

constexpr std::string_view kAbsent = "-";
constexpr std::string_view kManifestMagic = "# mpox-manifest schema_version=";
constexpr std::string_view kColumns =
    "# image_id\tpatient_id\tlabel\torigin\tparent_id\ttransform_name\trelative_path\tsource_note";

std::string EscapeField(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string UnescapeField(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += s[i];
    }
  }
  return out;
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos
                                                                       : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string OptionalField(const std::optional<std::string>& v) {
  return v ? EscapeField(*v) : std::string(kAbsent);
}

void CheckMetaShape(const ImageMeta& meta) {
  if (!IsValidId(meta.image_id)) {
    Fail(ErrorCode::kInvalidArgument, "invalid image_id '" + meta.image_id + "'");
  }
  if (!IsValidId(meta.patient_id)) {
    Fail(ErrorCode::kInvalidArgument,
         "invalid patient_id '" + meta.patient_id + "' for image " + meta.image_id);
  }
  const bool augmented = meta.origin == Origin::kAugmented;
  if (augmented != meta.parent_id.has_value() || augmented != meta.transform_name.has_value()) {
    Fail(ErrorCode::kInvalidArgument,
         "image " + meta.image_id +
             ": parent_id and transform_name must be set exactly when origin=augmented");
  }
}

}  // namespace

std::string_view LabelName(ClassLabel label) {
  return label == ClassLabel::kMonkeypox ? "Monkeypox" : "Others";
}

ClassLabel ParseLabel(std::string_view name) {
  if (name == "Monkeypox") return ClassLabel::kMonkeypox;
  if (name == "Others") return ClassLabel::kOthers;
  Fail(ErrorCode::kInvalidArgument, "unknown class label '" + std::string(name) + "'");
}

std::string_view OriginName(Origin origin) {
  return origin == Origin::kOriginal ? "original" : "augmented";
}

Origin ParseOrigin(std::string_view name) {
  if (name == "original") return Origin::kOriginal;
  if (name == "augmented") return Origin::kAugmented;
  Fail(ErrorCode::kInvalidArgument, "unknown origin '" + std::string(name) + "'");
}

bool IsValidId(std::string_view id) {
  if (id.empty() || id == "." || id == ".." || id == kAbsent) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
  });
}

void ValidateLesionImage(const LesionImage& image) {
  CheckMetaShape(image.meta);
  if (image.pixels.width() != kImageSide || image.pixels.height() != kImageSide) {
    Fail(ErrorCode::kInvalidArgument,
         "image " + image.meta.image_id + " is " + std::to_string(image.pixels.width()) + "x" +
             std::to_string(image.pixels.height()) + ", expected 224x224");
  }
}

// ---------------------------------------------------------------------------
// Manifest

void DatasetManifest::Add(ManifestEntry entry) {
  CheckMetaShape(entry.meta);
  if (index_.count(entry.meta.image_id) != 0) {
    Fail(ErrorCode::kInvalidArgument, "duplicate image_id " + entry.meta.image_id);
  }
  index_.emplace(entry.meta.image_id, entries_.size());
  entries_.push_back(std::move(entry));
}

const ManifestEntry* DatasetManifest::Find(std::string_view image_id) const {
  auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const ManifestEntry& DatasetManifest::Get(std::string_view image_id) const {
  const ManifestEntry* e = Find(image_id);
  if (e == nullptr) {
    Fail(ErrorCode::kNotFound, "image_id " + std::string(image_id) + " is not in the manifest");
  }
  return *e;
}

std::filesystem::path DatasetManifest::ResolvePath(const ManifestEntry& entry) const {
  return (base_dir_ / entry.relative_path).lexically_normal();
}

void DatasetManifest::Validate() const {
  std::map<std::string, ClassLabel, std::less<>> patient_label;
  for (const auto& e : entries_) {
    auto [it, inserted] = patient_label.emplace(e.meta.patient_id, e.meta.label);
    if (!inserted && it->second != e.meta.label) {
      Fail(ErrorCode::kFailedPrecondition,
           "patient_id " + e.meta.patient_id + " appears under both classes (image " +
               e.meta.image_id + ")");
    }
  }
  for (const auto& e : entries_) {
    if (e.meta.origin != Origin::kAugmented) continue;
    const ManifestEntry* parent = Find(*e.meta.parent_id);
    if (parent == nullptr) {
      Fail(ErrorCode::kFailedPrecondition,
           "image " + e.meta.image_id + " references missing parent " + *e.meta.parent_id);
    }
    if (parent->meta.origin != Origin::kOriginal) {
      Fail(ErrorCode::kFailedPrecondition,
           "image " + e.meta.image_id + " has augmented parent " + parent->meta.image_id);
    }
    if (parent->meta.patient_id != e.meta.patient_id || parent->meta.label != e.meta.label) {
      Fail(ErrorCode::kFailedPrecondition,
           "image " + e.meta.image_id + " disagrees with parent " + parent->meta.image_id +
               " on patient or label");
    }
  }
}

std::string DatasetManifest::Serialize() const {
  std::string out;
  out += kManifestMagic;
  out += std::to_string(schema_version_);
  out += '\n';
  out += kColumns;
  out += '\n';
  for (const auto& e : entries_) {
    const auto& m = e.meta;
    out += m.image_id;
    out += '\t';
    out += m.patient_id;
    out += '\t';
    out += LabelName(m.label);
    out += '\t';
    out += OriginName(m.origin);
    out += '\t';
    out += OptionalField(m.parent_id);
    out += '\t';
    out += OptionalField(m.transform_name);
    out += '\t';
    out += EscapeField(e.relative_path);
    out += '\t';
    out += EscapeField(m.source_note);
    out += '\n';
  }
  return out;
}

DatasetManifest DatasetManifest::Parse(std::string_view text, std::filesystem::path base_dir,
                                       std::string_view origin) {
  DatasetManifest manifest(std::move(base_dir));
  std::size_t line_no = 0;
  bool saw_version = false;
  const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no) + ": "; };
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with(kManifestMagic)) {
        const std::string v(line.substr(kManifestMagic.size()));
        try {
          manifest.schema_version_ = std::stoi(v);
        } catch (const std::exception&) {
          Fail(ErrorCode::kDataLoss, where() + "bad schema_version '" + v + "'");
        }
        if (manifest.schema_version_ != kSchemaVersion) {
          Fail(ErrorCode::kFailedPrecondition,
               where() + "unsupported schema_version " + v);
        }
        saw_version = true;
      }
      continue;
    }
    if (!saw_version) Fail(ErrorCode::kDataLoss, where() + "missing schema_version header");
    const auto f = SplitTabs(line);
    if (f.size() != 8) {
      Fail(ErrorCode::kDataLoss, where() + "expected 8 fields, found " + std::to_string(f.size()));
    }
    ManifestEntry e;
    try {
      e.meta.image_id = std::string(f[0]);
      e.meta.patient_id = std::string(f[1]);
      e.meta.label = ParseLabel(f[2]);
      e.meta.origin = ParseOrigin(f[3]);
      if (f[4] != kAbsent) e.meta.parent_id = UnescapeField(f[4]);
      if (f[5] != kAbsent) e.meta.transform_name = UnescapeField(f[5]);
      e.relative_path = UnescapeField(f[6]);
      e.meta.source_note = UnescapeField(f[7]);
      manifest.Add(std::move(e));
    } catch (const Error& err) {
      Fail(ErrorCode::kDataLoss, where() + err.what());
    }
  }
  if (!saw_version) Fail(ErrorCode::kDataLoss, std::string(origin) + ": missing schema_version header");
  return manifest;
}

DatasetManifest DatasetManifest::Read(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const Error&) {
    Fail(ErrorCode::kNotFound, "manifest not found: " + path.string());
  }
  return Parse(text, path.parent_path(), path.string());
}

void DatasetManifest::Write(const std::filesystem::path& path) const {
  WriteTextFile(path, Serialize());
}

Image FilePixelSource::Load(const DatasetManifest& manifest, const ManifestEntry& entry) {
  return ReadImageFile(manifest.ResolvePath(entry));
}

// ---------------------------------------------------------------------------
// Ingestion

void ValidateRoi(const Rect& roi, int width, int height) {
  if (roi.width <= 0 || roi.height <= 0) {
    Fail(ErrorCode::kInvalidArgument, "roi " + ToString(roi) + " has zero area");
  }
  if (roi.x < 0 || roi.y < 0 || roi.x > width - roi.width || roi.y > height - roi.height) {
    Fail(ErrorCode::kOutOfRange, "roi " + ToString(roi) + " exceeds image bounds " +
                                     std::to_string(width) + "x" + std::to_string(height));
  }
}

LesionImage IngestImage(const Image& raw, const Rect& roi, const IngestMeta& meta) {
  if (raw.empty()) Fail(ErrorCode::kInvalidArgument, "empty source image");
  ValidateRoi(roi, raw.width(), raw.height());

  SquarePadding pad;
  Image square = PadToSquareReplicate(Crop(raw, roi), &pad);

  LesionImage out;
  out.meta.image_id = meta.image_id;
  out.meta.patient_id = meta.patient_id;
  out.meta.label = meta.label;
  out.meta.origin = Origin::kOriginal;
  std::ostringstream note;
  if (!meta.source_note.empty()) note << meta.source_note << "; ";
  note << "roi=" << roi.x << ',' << roi.y << ',' << roi.width << ',' << roi.height
       << " pad_tblr=" << pad.top << ',' << pad.bottom << ',' << pad.left << ',' << pad.right
       << " quality_screening=manual";
  out.meta.source_note = note.str();
  out.pixels = ResizeBilinear(square, kImageSide, kImageSide);
  ValidateLesionImage(out);
  return out;
}

LesionImage IngestEncoded(std::span<const std::uint8_t> encoded, const Rect& roi,
                          const IngestMeta& meta) {
  return IngestImage(DecodeImage(encoded), roi, meta);
}

std::filesystem::path PayloadRelativePath(const ImageMeta& meta) {
  return std::filesystem::path("images") / std::string(LabelName(meta.label)) / meta.patient_id /
         (meta.image_id + ".png");
}

ManifestEntry StoreImage(const LesionImage& image, const std::filesystem::path& manifest_dir) {
  ValidateLesionImage(image);
  ManifestEntry entry{image.meta, PayloadRelativePath(image.meta).generic_string()};
  WritePngFile(manifest_dir / entry.relative_path, image.pixels);
  return entry;
}

// ---------------------------------------------------------------------------
// Counts

CountsSummary Summarize(const DatasetManifest& manifest) {
  manifest.Validate();
  CountsSummary summary;
  std::set<std::string> patients[kNumClasses];
  std::set<std::string> augmented_parents[kNumClasses];
  for (const auto& e : manifest.entries()) {
    const std::size_t k = LabelIndex(e.meta.label);
    patients[k].insert(e.meta.patient_id);
    if (e.meta.origin == Origin::kOriginal) {
      ++summary.per_class[k].original_images;
    } else {
      ++summary.per_class[k].augmented_images;
      augmented_parents[k].insert(*e.meta.parent_id);
    }
  }
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    auto& c = summary.per_class[k];
    c.unique_patients = patients[k].size();
    // The augmented set holds every expanded original plus its derivatives.
    c.augmented_images += augmented_parents[k].size();
    summary.total.original_images += c.original_images;
    summary.total.unique_patients += c.unique_patients;
    summary.total.augmented_images += c.augmented_images;
  }
  return summary;
}

std::string FormatCountsTable(const CountsSummary& summary) {
  std::ostringstream out;
  const auto row = [&](std::string_view name, const ClassCounts& c) {
    out << name << '\t' << c.original_images << '\t' << c.unique_patients << '\t'
        << c.augmented_images << '\n';
  };
  out << "class_label\toriginal_images\tunique_patients\taugmented_images\n";
  for (ClassLabel label : kAllLabels) row(LabelName(label), summary.of(label));
  row("Total", summary.total);
  return out.str();
}

}  // namespace mpox
