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


#include "mpox/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "mpox/codec.hpp"
#include "mpox/error.hpp"
#include "mpox/hash.hpp"
#include "mpox/random.hpp"

namespace mpox {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Hsv {
  double h;  // [0, 360)
  double s;  // [0, 1]
  double v;  // [0, 255]
};

Hsv RgbToHsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out{0.0, mx > 0.0 ? d / mx : 0.0, mx};
  if (d > 0.0) {
    if (mx == r) out.h = 60.0 * std::fmod((g - b) / d, 6.0);
    else if (mx == g) out.h = 60.0 * ((b - r) / d + 2.0);
    else out.h = 60.0 * ((r - g) / d + 4.0);
    if (out.h < 0.0) out.h += 360.0;
  }
  return out;
}

std::array<double, 3> HsvToRgb(const Hsv& hsv) {
  const double c = hsv.v * hsv.s;
  const double hp = hsv.h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = hsv.v - c;
  return {r + m, g + m, b + m};
}

/// Output pixel (x, y) takes the source sample at map(x, y).
template <typename Map>
Image Warp(const Image& src, Map map) {
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto [sx, sy] = map(static_cast<double>(x), static_cast<double>(y));
      const auto v = SampleBilinear(src, sx, sy);
      for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = ClampToByte(v[c]);
    }
  }
  return out;
}

template <typename PixelFn>
Image MapPixels(const Image& src, PixelFn fn) {
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const auto v = fn(static_cast<double>(src.at(x, y, 0)), static_cast<double>(src.at(x, y, 1)),
                        static_cast<double>(src.at(x, y, 2)));
      for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = ClampToByte(v[c]);
    }
  }
  return out;
}

Image RotateQuarterTurns(const Image& src, int turns) {
  turns = ((turns % 4) + 4) % 4;
  const int w = src.width();
  const int h = src.height();
  Image out(turns % 2 == 0 ? w : h, turns % 2 == 0 ? h : w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int dx = x, dy = y;
      switch (turns) {
        case 1: dx = y; dy = w - 1 - x; break;          // counter-clockwise
        case 2: dx = w - 1 - x; dy = h - 1 - y; break;
        case 3: dx = h - 1 - y; dy = x; break;
        default: break;
      }
      for (int c = 0; c < Image::kChannels; ++c) out.at(dx, dy, c) = src.at(x, y, c);
    }
  }
  return out;
}

std::vector<double> GaussianKernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image GaussianBlur(const Image& src, double sigma) {
  if (sigma <= 0.0) return src;
  const auto k = GaussianKernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = src.width();
  const int h = src.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * src.at(std::clamp(x + i, 0, w - 1), y, c);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp[(static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x) * 3 + c];
        }
        out.at(x, y, c) = ClampToByte(acc);
      }
    }
  }
  return out;
}

void CheckRange(const Range& r, std::string_view name) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
    Fail(ErrorCode::kInvalidArgument,
         "augmentation range '" + std::string(name) + "' is empty or not finite");
  }
}

Range GetRange(const KeyValueConfig& cfg, std::string_view key, Range fallback) {
  if (!cfg.Has(key)) return fallback;
  const auto v = cfg.GetDoubleList(key);
  if (v.size() != 2) {
    Fail(ErrorCode::kInvalidArgument,
         cfg.origin() + ": key '" + std::string(key) + "' needs two values 'lo, hi'");
  }
  return {v[0], v[1]};
}

std::string RangeText(const Range& r) { return FormatDouble(r.lo) + ", " + FormatDouble(r.hi); }

std::string DescribeParams(TransformKind kind, const TransformParams& p) {
  std::ostringstream s;
  switch (kind) {
    case TransformKind::kRot90Multiple: s << "quarter_turns=" << p.quarter_turns; break;
    case TransformKind::kRotFree:
    case TransformKind::kShear: s << "degrees=" << FormatDouble(p.degrees); break;
    case TransformKind::kTranslation:
      s << "shift_px=" << FormatDouble(p.shift_x) << ',' << FormatDouble(p.shift_y);
      break;
    case TransformKind::kReflection: s << "axis=" << (p.quarter_turns == 0 ? "horizontal" : "vertical"); break;
    case TransformKind::kHueJitter: s << "hue_shift=" << FormatDouble(p.hue_shift); break;
    case TransformKind::kSaturationJitter:
    case TransformKind::kBrightnessJitter:
    case TransformKind::kContrastJitter:
    case TransformKind::kScaling: s << "factor=" << FormatDouble(p.factor); break;
    case TransformKind::kSaltPepperNoise: s << "density=" << FormatDouble(p.density); break;
    case TransformKind::kGaussianNoise:
    case TransformKind::kSyntheticBlur: s << "sigma=" << FormatDouble(p.sigma); break;
  }
  return s.str();
}

}  // namespace

std::string_view TransformName(TransformKind kind) {
  switch (kind) {
    case TransformKind::kRot90Multiple: return "Rot90Multiple";
    case TransformKind::kRotFree: return "RotFree";
    case TransformKind::kTranslation: return "Translation";
    case TransformKind::kReflection: return "Reflection";
    case TransformKind::kShear: return "Shear";
    case TransformKind::kHueJitter: return "HueJitter";
    case TransformKind::kSaturationJitter: return "SaturationJitter";
    case TransformKind::kBrightnessJitter: return "BrightnessJitter";
    case TransformKind::kContrastJitter: return "ContrastJitter";
    case TransformKind::kSaltPepperNoise: return "SaltPepperNoise";
    case TransformKind::kGaussianNoise: return "GaussianNoise";
    case TransformKind::kSyntheticBlur: return "SyntheticBlur";
    case TransformKind::kScaling: return "Scaling";
  }
  Fail(ErrorCode::kInvalidArgument, "unknown transform kind");
}

TransformKind ParseTransformKind(std::string_view name) {
  for (TransformKind kind : kAllTransformKinds) {
    if (TransformName(kind) == name) return kind;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown transform kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Spec

void AugmentationSpec::Validate() const {
  CheckRange(rot_free_degrees, "rot_free_degrees");
  CheckRange(translation_fraction, "translation_fraction");
  CheckRange(shear_degrees, "shear_degrees");
  CheckRange(hue_shift_fraction, "hue_shift_fraction");
  CheckRange(saturation_scale, "saturation_scale");
  CheckRange(brightness_scale, "brightness_scale");
  CheckRange(contrast_scale, "contrast_scale");
  CheckRange(blur_sigma, "blur_sigma");
  CheckRange(scale_factor, "scale_factor");
  if (!(salt_pepper_density >= 0.0 && salt_pepper_density <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "salt_pepper_density must lie in [0, 1]");
  }
  if (!(gaussian_noise_sigma >= 0.0) || !std::isfinite(gaussian_noise_sigma)) {
    Fail(ErrorCode::kInvalidArgument, "gaussian_noise_sigma must be >= 0");
  }
  if (blur_sigma.lo < 0.0) Fail(ErrorCode::kInvalidArgument, "blur_sigma must be >= 0");
  if (saturation_scale.lo < 0.0 || brightness_scale.lo < 0.0 || contrast_scale.lo < 0.0) {
    Fail(ErrorCode::kInvalidArgument, "photometric scales must be >= 0");
  }
  if (scale_factor.lo <= 0.0) Fail(ErrorCode::kInvalidArgument, "scale_factor must be > 0");
}

AugmentationSpec AugmentationSpec::FromConfig(const KeyValueConfig& cfg) {
  cfg.RejectUnknownKeys({"master_seed", "rot_free_degrees", "translation_fraction",
                         "reflection_axis", "shear_degrees", "hue_shift_fraction",
                         "saturation_scale", "brightness_scale", "contrast_scale",
                         "salt_pepper_density", "gaussian_noise_sigma", "blur_sigma",
                         "scale_factor"});
  AugmentationSpec spec;
  if (!cfg.Has("master_seed")) {
    Fail(ErrorCode::kInvalidArgument, cfg.origin() + ": master_seed is mandatory");
  }
  spec.master_seed = cfg.GetU64("master_seed");
  spec.rot_free_degrees = GetRange(cfg, "rot_free_degrees", spec.rot_free_degrees);
  spec.translation_fraction = GetRange(cfg, "translation_fraction", spec.translation_fraction);
  if (cfg.Has("reflection_axis")) {
    const auto axis = cfg.GetString("reflection_axis");
    if (axis == "horizontal") spec.reflection_axis = ReflectionAxis::kHorizontal;
    else if (axis == "vertical") spec.reflection_axis = ReflectionAxis::kVertical;
    else Fail(ErrorCode::kInvalidArgument, cfg.origin() + ": reflection_axis must be horizontal or vertical");
  }
  spec.shear_degrees = GetRange(cfg, "shear_degrees", spec.shear_degrees);
  spec.hue_shift_fraction = GetRange(cfg, "hue_shift_fraction", spec.hue_shift_fraction);
  spec.saturation_scale = GetRange(cfg, "saturation_scale", spec.saturation_scale);
  spec.brightness_scale = GetRange(cfg, "brightness_scale", spec.brightness_scale);
  spec.contrast_scale = GetRange(cfg, "contrast_scale", spec.contrast_scale);
  if (cfg.Has("salt_pepper_density")) spec.salt_pepper_density = cfg.GetDouble("salt_pepper_density");
  if (cfg.Has("gaussian_noise_sigma")) spec.gaussian_noise_sigma = cfg.GetDouble("gaussian_noise_sigma");
  spec.blur_sigma = GetRange(cfg, "blur_sigma", spec.blur_sigma);
  spec.scale_factor = GetRange(cfg, "scale_factor", spec.scale_factor);
  spec.Validate();
  return spec;
}

KeyValueConfig AugmentationSpec::ToConfig() const {
  KeyValueConfig cfg;
  cfg.Set("master_seed", std::to_string(master_seed));
  cfg.Set("rot_free_degrees", RangeText(rot_free_degrees));
  cfg.Set("translation_fraction", RangeText(translation_fraction));
  cfg.Set("reflection_axis", reflection_axis == ReflectionAxis::kHorizontal ? "horizontal" : "vertical");
  cfg.Set("shear_degrees", RangeText(shear_degrees));
  cfg.Set("hue_shift_fraction", RangeText(hue_shift_fraction));
  cfg.Set("saturation_scale", RangeText(saturation_scale));
  cfg.Set("brightness_scale", RangeText(brightness_scale));
  cfg.Set("contrast_scale", RangeText(contrast_scale));
  cfg.Set("salt_pepper_density", FormatDouble(salt_pepper_density));
  cfg.Set("gaussian_noise_sigma", FormatDouble(gaussian_noise_sigma));
  cfg.Set("blur_sigma", RangeText(blur_sigma));
  cfg.Set("scale_factor", RangeText(scale_factor));
  return cfg;
}

AugmentationSpec AugmentationSpec::Load(const std::filesystem::path& path) {
  return FromConfig(KeyValueConfig::Load(path));
}

void AugmentationSpec::Save(const std::filesystem::path& path) const {
  WriteTextFile(path, ToConfig().Serialize());
}

// ---------------------------------------------------------------------------
// Transforms

std::uint64_t TransformSeed(std::uint64_t master_seed, std::string_view image_id,
                            TransformKind kind) {
  return DeriveSeed(master_seed, image_id, TransformName(kind));
}

namespace {

TransformParams DrawParams(TransformKind kind, const AugmentationSpec& spec, Rng& rng) {
  TransformParams p;
  const auto draw = [&](const Range& r) { return rng.Uniform(r.lo, r.hi); };
  switch (kind) {
    case TransformKind::kRot90Multiple:
      p.quarter_turns = 1 + static_cast<int>(rng.UniformIndex(3));
      break;
    case TransformKind::kRotFree: p.degrees = draw(spec.rot_free_degrees); break;
    case TransformKind::kTranslation:
      p.shift_x = draw(spec.translation_fraction) * kImageSide;
      p.shift_y = draw(spec.translation_fraction) * kImageSide;
      break;
    case TransformKind::kReflection:
      p.quarter_turns = spec.reflection_axis == ReflectionAxis::kHorizontal ? 0 : 1;
      break;
    case TransformKind::kShear: p.degrees = draw(spec.shear_degrees); break;
    case TransformKind::kHueJitter: p.hue_shift = draw(spec.hue_shift_fraction); break;
    case TransformKind::kSaturationJitter: p.factor = draw(spec.saturation_scale); break;
    case TransformKind::kBrightnessJitter: p.factor = draw(spec.brightness_scale); break;
    case TransformKind::kContrastJitter: p.factor = draw(spec.contrast_scale); break;
    case TransformKind::kSaltPepperNoise: p.density = spec.salt_pepper_density; break;
    case TransformKind::kGaussianNoise: p.sigma = spec.gaussian_noise_sigma; break;
    case TransformKind::kSyntheticBlur: p.sigma = draw(spec.blur_sigma); break;
    case TransformKind::kScaling: p.factor = draw(spec.scale_factor); break;
  }
  return p;
}

Image Render(const Image& src, TransformKind kind, const TransformParams& p, Rng& rng) {
  const double cx = (src.width() - 1) / 2.0;
  const double cy = (src.height() - 1) / 2.0;
  switch (kind) {
    case TransformKind::kRot90Multiple: return RotateQuarterTurns(src, p.quarter_turns);
    case TransformKind::kRotFree: {
      const double a = p.degrees * kDegToRad;
      const double ca = std::cos(a), sa = std::sin(a);
      // Counter-clockwise on screen (y grows downwards).
      return Warp(src, [&](double x, double y) {
        const double dx = x - cx, dy = y - cy;
        return std::pair{cx + ca * dx - sa * dy, cy + sa * dx + ca * dy};
      });
    }
    case TransformKind::kTranslation:
      return Warp(src, [&](double x, double y) { return std::pair{x - p.shift_x, y - p.shift_y}; });
    case TransformKind::kReflection: {
      Image out(src.width(), src.height());
      const bool horizontal = p.quarter_turns == 0;
      for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
          const int sx = horizontal ? src.width() - 1 - x : x;
          const int sy = horizontal ? y : src.height() - 1 - y;
          for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = src.at(sx, sy, c);
        }
      }
      return out;
    }
    case TransformKind::kShear: {
      const double t = std::tan(p.degrees * kDegToRad);
      return Warp(src, [&](double x, double y) { return std::pair{x - t * (y - cy), y}; });
    }
    case TransformKind::kHueJitter:
      return MapPixels(src, [&](double r, double g, double b) {
        Hsv hsv = RgbToHsv(r, g, b);
        hsv.h = std::fmod(hsv.h + 360.0 * p.hue_shift + 360.0, 360.0);
        return HsvToRgb(hsv);
      });
    case TransformKind::kSaturationJitter:
      return MapPixels(src, [&](double r, double g, double b) {
        Hsv hsv = RgbToHsv(r, g, b);
        hsv.s = std::clamp(hsv.s * p.factor, 0.0, 1.0);
        return HsvToRgb(hsv);
      });
    case TransformKind::kBrightnessJitter:
      return MapPixels(src, [&](double r, double g, double b) {
        return std::array<double, 3>{r * p.factor, g * p.factor, b * p.factor};
      });
    case TransformKind::kContrastJitter: {
      double mean = 0.0;
      for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) mean += Luma(src, x, y);
      }
      mean /= static_cast<double>(src.width()) * src.height();
      return MapPixels(src, [&](double r, double g, double b) {
        return std::array<double, 3>{(r - mean) * p.factor + mean, (g - mean) * p.factor + mean,
                                     (b - mean) * p.factor + mean};
      });
    }
    case TransformKind::kSaltPepperNoise: {
      Image out = src;
      for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
          if (!rng.Bernoulli(p.density)) continue;
          const std::uint8_t v = rng.Bernoulli(0.5) ? 255 : 0;
          for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = v;
        }
      }
      return out;
    }
    case TransformKind::kGaussianNoise: {
      if (p.sigma == 0.0) return src;
      Image out(src.width(), src.height());
      for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
          for (int c = 0; c < Image::kChannels; ++c) {
            out.at(x, y, c) = ClampToByte(src.at(x, y, c) + p.sigma * rng.Normal());
          }
        }
      }
      return out;
    }
    case TransformKind::kSyntheticBlur: return GaussianBlur(src, p.sigma);
    case TransformKind::kScaling:
      return Warp(src, [&](double x, double y) {
        return std::pair{cx + (x - cx) / p.factor, cy + (y - cy) / p.factor};
      });
  }
  Fail(ErrorCode::kInvalidArgument, "unknown transform kind");
}

}  // namespace

TransformParams SampleTransformParams(TransformKind kind, const AugmentationSpec& spec,
                                      std::uint64_t derived_seed) {
  Rng rng(derived_seed);
  return DrawParams(kind, spec, rng);
}

LesionImage ApplyTransform(const LesionImage& image, TransformKind kind,
                           const AugmentationSpec& spec, std::uint64_t derived_seed) {
  if (image.meta.origin != Origin::kOriginal) {
    Fail(ErrorCode::kFailedPrecondition,
         "image " + image.meta.image_id + " is already augmented; chaining is not supported");
  }
  ValidateLesionImage(image);
  spec.Validate();

  Rng rng(derived_seed);
  const TransformParams params = DrawParams(kind, spec, rng);

  LesionImage out;
  out.meta.image_id = AugmentedImageId(image.meta.image_id, kind);
  out.meta.patient_id = image.meta.patient_id;
  out.meta.label = image.meta.label;
  out.meta.origin = Origin::kAugmented;
  out.meta.parent_id = image.meta.image_id;
  out.meta.transform_name = std::string(TransformName(kind));
  out.meta.source_note = "derived_seed=" + ToHex64(derived_seed) + " " + DescribeParams(kind, params);
  out.pixels = Render(image.pixels, kind, params, rng);
  ValidateLesionImage(out);
  return out;
}

std::string AugmentedImageId(std::string_view parent_id, TransformKind kind) {
  return std::string(parent_id) + "__" + std::string(TransformName(kind));
}

std::vector<LesionImage> AugmentOriginal(const LesionImage& image, const AugmentationSpec& spec) {
  std::vector<LesionImage> out;
  out.reserve(kAllTransformKinds.size());
  for (TransformKind kind : kAllTransformKinds) {
    out.push_back(ApplyTransform(image, kind, spec,
                                 TransformSeed(spec.master_seed, image.meta.image_id, kind)));
  }
  return out;
}

DatasetManifest ExpandDataset(const DatasetManifest& manifest, const AugmentationSpec& spec,
                              const std::filesystem::path& out_dir, PixelSource& source,
                              ExpandOptions options) {
  spec.Validate();
  manifest.Validate();
  for (const auto& e : manifest.entries()) {
    if (e.meta.origin == Origin::kAugmented) {
      Fail(ErrorCode::kFailedPrecondition,
           "manifest already contains augmented image " + e.meta.image_id +
               "; refusing to expand twice");
    }
  }

  const auto& entries = manifest.entries();
  std::vector<std::vector<ManifestEntry>> children(entries.size());
  std::filesystem::create_directories(out_dir);
  const auto work = [&](std::size_t i) {
    LesionImage original{entries[i].meta, source.Load(manifest, entries[i])};
    for (const auto& child : AugmentOriginal(original, spec)) {
      children[i].push_back(StoreImage(child, out_dir));
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, entries.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < entries.size(); ++i) work(i);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < entries.size(); i += threads) work(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const auto abs_out = std::filesystem::absolute(out_dir);
  DatasetManifest out(out_dir);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ManifestEntry original = entries[i];
    original.relative_path =
        std::filesystem::absolute(manifest.ResolvePath(entries[i]))
            .lexically_normal()
            .lexically_relative(abs_out.lexically_normal())
            .generic_string();
    out.Add(std::move(original));
    for (auto& child : children[i]) out.Add(std::move(child));
  }
  return out;
}

}  // namespace mpox
