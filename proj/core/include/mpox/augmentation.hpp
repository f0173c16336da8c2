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


#ifndef MPOX_AUGMENTATION_HPP_
#define MPOX_AUGMENTATION_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpox/dataset.hpp"
#include "mpox/kv_config.hpp"

namespace mpox {

/// The thirteen label-preserving perturbations; each original yields one
/// sample of every kind.
enum class TransformKind {
  kRot90Multiple,
  kRotFree,
  kTranslation,
  kReflection,
  kShear,
  kHueJitter,
  kSaturationJitter,
  kBrightnessJitter,
  kContrastJitter,
  kSaltPepperNoise,
  kGaussianNoise,
  kSyntheticBlur,
  kScaling,
};

inline constexpr std::array<TransformKind, 13> kAllTransformKinds = {
    TransformKind::kRot90Multiple,    TransformKind::kRotFree,
    TransformKind::kTranslation,      TransformKind::kReflection,
    TransformKind::kShear,            TransformKind::kHueJitter,
    TransformKind::kSaturationJitter, TransformKind::kBrightnessJitter,
    TransformKind::kContrastJitter,   TransformKind::kSaltPepperNoise,
    TransformKind::kGaussianNoise,    TransformKind::kSyntheticBlur,
    TransformKind::kScaling,
};

/// Original image plus one sample per kind.
inline constexpr std::size_t kExpansionFactor = kAllTransformKinds.size() + 1;

std::string_view TransformName(TransformKind kind);
/// Throws Error(kInvalidArgument) for names outside the catalog.
TransformKind ParseTransformKind(std::string_view name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Range&, const Range&) = default;
};

enum class ReflectionAxis { kHorizontal, kVertical };

struct AugmentationSpec {
  std::uint64_t master_seed = 0;
  Range rot_free_degrees{-45.0, 45.0};
  Range translation_fraction{-0.10, 0.10};  // per axis, of the image side
  ReflectionAxis reflection_axis = ReflectionAxis::kHorizontal;
  Range shear_degrees{-15.0, 15.0};
  Range hue_shift_fraction{-0.05, 0.05};  // of the full hue circle
  Range saturation_scale{0.7, 1.3};
  Range brightness_scale{0.7, 1.3};
  Range contrast_scale{0.7, 1.3};
  double salt_pepper_density = 0.02;
  double gaussian_noise_sigma = 10.0;  // 8-bit intensity units
  Range blur_sigma{1.0, 2.0};
  Range scale_factor{0.8, 1.2};

  void Validate() const;

  /// master_seed is mandatory; every other key falls back to the default.
  static AugmentationSpec FromConfig(const KeyValueConfig& config);
  KeyValueConfig ToConfig() const;

  static AugmentationSpec Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

/// Concrete draw for one transform. Only the fields relevant to the kind
/// are meaningful.
struct TransformParams {
  int quarter_turns = 0;
  double degrees = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;  // pixels
  double factor = 1.0;   // saturation/brightness/contrast/scaling factor
  double hue_shift = 0.0;
  double sigma = 0.0;    // blur or noise sigma
  double density = 0.0;
};

/// Seed for (master_seed, image_id, kind); independent of other images.
std::uint64_t TransformSeed(std::uint64_t master_seed, std::string_view image_id,
                            TransformKind kind);

/// The parameter draw ApplyTransform makes for this seed.
TransformParams SampleTransformParams(TransformKind kind, const AugmentationSpec& spec,
                                      std::uint64_t derived_seed);

/// Produces the augmented child of an original image. All randomness comes
/// from `derived_seed`. Geometric kinds resample bilinearly with edge
/// replication; every channel is rounded and clamped to [0, 255].
/// Augmented inputs are rejected.
LesionImage ApplyTransform(const LesionImage& image, TransformKind kind,
                           const AugmentationSpec& spec, std::uint64_t derived_seed);

std::string AugmentedImageId(std::string_view parent_id, TransformKind kind);

/// The 13 children of one original, in catalog order.
std::vector<LesionImage> AugmentOriginal(const LesionImage& image, const AugmentationSpec& spec);

struct ExpandOptions {
  unsigned threads = 1;
};

/// Writes 13 augmented payloads per original below `out_dir` and returns a
/// manifest rooted at `out_dir` holding each original followed by its
/// children. Originals keep pointing at their existing payloads. Output is
/// byte-for-byte reproducible for a given spec.
DatasetManifest ExpandDataset(const DatasetManifest& manifest, const AugmentationSpec& spec,
                              const std::filesystem::path& out_dir, PixelSource& source,
                              ExpandOptions options = {});

}  // namespace mpox

#endif  // MPOX_AUGMENTATION_HPP_
