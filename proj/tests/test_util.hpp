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


#ifndef MPOX_TESTS_TEST_UTIL_HPP_
#define MPOX_TESTS_TEST_UTIL_HPP_

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpox/dataset.hpp"
#include "mpox/hash.hpp"
#include "mpox/image.hpp"
#include "mpox/random.hpp"

namespace mpox::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mpox-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Image SolidImage(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

inline Image NoiseImage(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(rng.UniformIndex(256));
  return img;
}

/// Distinct smooth-ish content per seed: gradients plus a bright blob.
inline Image PatternImage(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  const double cx = rng.Uniform(0.2, 0.8) * w, cy = rng.Uniform(0.2, 0.8) * h;
  const double r = rng.Uniform(0.1, 0.3) * w;
  const int base[3] = {static_cast<int>(rng.UniformIndex(200)), static_cast<int>(rng.UniformIndex(200)),
                       static_cast<int>(rng.UniformIndex(200))};
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in = (x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r;
      for (int c = 0; c < 3; ++c) {
        const double v = base[c] + 40.0 * x / w + 15.0 * c * y / h + (in ? 60 : 0);
        img.at(x, y, c) = ClampToByte(v);
      }
    }
  }
  return img;
}

inline LesionImage MakeLesion(std::string id, std::string patient, ClassLabel label, Image pixels) {
  LesionImage img;
  img.meta.image_id = std::move(id);
  img.meta.patient_id = std::move(patient);
  img.meta.label = label;
  img.pixels = std::move(pixels);
  return img;
}

/// Per-class list of images-per-patient.
struct ClassLayout {
  ClassLabel label;
  std::vector<int> images_per_patient;
};

inline std::string PatientName(ClassLabel label, std::size_t p) {
  return std::string(label == ClassLabel::kMonkeypox ? "mpx" : "oth") + "_p" + std::to_string(p);
}

/// Manifest of originals without pixel payloads (planning only).
inline DatasetManifest MetaManifest(const std::vector<ClassLayout>& layout) {
  DatasetManifest m("/nonexistent");
  for (const auto& cls : layout) {
    for (std::size_t p = 0; p < cls.images_per_patient.size(); ++p) {
      const std::string patient = PatientName(cls.label, p);
      for (int i = 0; i < cls.images_per_patient[p]; ++i) {
        ManifestEntry e;
        e.meta.image_id = patient + "_i" + std::to_string(i);
        e.meta.patient_id = patient;
        e.meta.label = cls.label;
        e.relative_path = e.meta.image_id + ".png";
        m.Add(std::move(e));
      }
    }
  }
  return m;
}

enum class ColorScheme { kRedGreen, kRandom, kPattern };

/// Stored 224x224 originals. Red/green: Monkeypox noisy red, Others noisy
/// green. Random: uniform noise regardless of class.
inline DatasetManifest StoredManifest(const std::filesystem::path& dir, int patients_per_class,
                                      int images_per_patient, ColorScheme scheme,
                                      std::uint64_t seed) {
  DatasetManifest m(dir);
  for (ClassLabel label : kAllLabels) {
    for (int p = 0; p < patients_per_class; ++p) {
      const std::string patient = PatientName(label, p);
      for (int i = 0; i < images_per_patient; ++i) {
        const std::string id = patient + "_i" + std::to_string(i);
        const std::uint64_t s = DeriveSeed(seed, id);
        Image px;
        if (scheme == ColorScheme::kRandom) {
          px = NoiseImage(kImageSide, kImageSide, s);
        } else if (scheme == ColorScheme::kPattern) {
          px = PatternImage(kImageSide, kImageSide, s);
        } else {
          Rng rng(s);
          px = Image(kImageSide, kImageSide);
          const int hot = label == ClassLabel::kMonkeypox ? 0 : 1;
          for (int y = 0; y < kImageSide; ++y) {
            for (int x = 0; x < kImageSide; ++x) {
              for (int c = 0; c < 3; ++c) {
                px.at(x, y, c) = ClampToByte((c == hot ? 215.0 : 30.0) + rng.Uniform(-25, 25));
              }
            }
          }
        }
        m.Add(StoreImage(MakeLesion(id, patient, label, std::move(px)), dir));
      }
    }
  }
  return m;
}

/// Pixel source that records every image id it loads.
class RecordingPixelSource final : public PixelSource {
 public:
  Image Load(const DatasetManifest& manifest, const ManifestEntry& entry) override {
    loaded.push_back(entry.meta.image_id);
    return inner_.Load(manifest, entry);
  }
  std::vector<std::string> loaded;

 private:
  FilePixelSource inner_;
};

}  // namespace mpox::testing

#endif  // MPOX_TESTS_TEST_UTIL_HPP_
