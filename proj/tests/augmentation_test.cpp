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


#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "mpox/augmentation.hpp"
#include "mpox/codec.hpp"
#include "mpox/error.hpp"
#include "test_util.hpp"

namespace mpox {
namespace {

using testing::MakeLesion;
using testing::TempDir;

LesionImage Original(std::uint64_t seed = 1) {
  return MakeLesion("orig", "p1", ClassLabel::kMonkeypox, testing::PatternImage(224, 224, seed));
}

TEST(TransformCatalogTest, ThirteenNamedKinds) {
  EXPECT_EQ(kAllTransformKinds.size(), 13u);
  EXPECT_EQ(kExpansionFactor, 14u);
  std::set<std::string> names;
  for (TransformKind k : kAllTransformKinds) {
    names.insert(std::string(TransformName(k)));
    EXPECT_EQ(ParseTransformKind(TransformName(k)), k);
  }
  EXPECT_EQ(names.size(), 13u);
  EXPECT_THROW(ParseTransformKind("Sharpen"), Error);
}

TEST(AugmentationSpecTest, DefaultsAndConfigRoundTrip) {
  AugmentationSpec spec;
  EXPECT_EQ(spec.rot_free_degrees, (Range{-45, 45}));
  EXPECT_EQ(spec.salt_pepper_density, 0.02);
  spec.master_seed = 0xfeedu;
  spec.shear_degrees = {-5, 7.5};
  TempDir dir;
  spec.Save(dir / "spec.cfg");
  EXPECT_EQ(AugmentationSpec::Load(dir / "spec.cfg"), spec);

  EXPECT_THROW(AugmentationSpec::FromConfig(KeyValueConfig::Parse("shear_degrees = -1,1\n")),
               Error);
  AugmentationSpec bad;
  bad.salt_pepper_density = 1.5;
  EXPECT_THROW(bad.Validate(), Error);
  bad = {};
  bad.rot_free_degrees = {10, -10};
  EXPECT_THROW(bad.Validate(), Error);
  bad = {};
  bad.gaussian_noise_sigma = -1;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(ApplyTransformTest, HalfTurnMapsCoordinates) {
  AugmentationSpec spec;
  std::uint64_t seed = 0;
  while (SampleTransformParams(TransformKind::kRot90Multiple, spec, seed).quarter_turns != 2) ++seed;
  const auto in = Original();
  const auto out = ApplyTransform(in, TransformKind::kRot90Multiple, spec, seed);
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      for (int c = 0; c < 3; ++c) ASSERT_EQ(out.pixels.at(223 - x, 223 - y, c), in.pixels.at(x, y, c));
    }
  }
}

TEST(ApplyTransformTest, ZeroSigmaGaussianNoiseIsIdentity) {
  AugmentationSpec spec;
  spec.gaussian_noise_sigma = 0;
  const auto in = Original();
  EXPECT_EQ(ApplyTransform(in, TransformKind::kGaussianNoise, spec, 77).pixels, in.pixels);
}

// Salt and pepper hits each pixel with probability `density`; a hit on a
// mid-grey pixel always changes it.
TEST(ApplyTransformTest, SaltPepperDensityMatchesBernoulliRate) {
  AugmentationSpec spec;
  const auto in = MakeLesion("g", "p", ClassLabel::kOthers, testing::SolidImage(224, 224, 128, 128, 128));
  double total = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto out = ApplyTransform(in, TransformKind::kSaltPepperNoise, spec, s);
    int changed = 0;
    for (int y = 0; y < 224; ++y) {
      for (int x = 0; x < 224; ++x) changed += out.pixels.at(x, y, 0) != 128;
    }
    total += changed / (224.0 * 224.0);
  }
  EXPECT_NEAR(total / 100, 0.02, 0.005);
}

TEST(ApplyTransformTest, BrightnessOnConstantImage) {
  AugmentationSpec spec;
  for (int v : {0, 37, 128, 200, 255}) {
    const auto in = MakeLesion("c", "p", ClassLabel::kOthers,
                               testing::SolidImage(224, 224, v, v, v));
    for (std::uint64_t s = 0; s < 10; ++s) {
      const double f = SampleTransformParams(TransformKind::kBrightnessJitter, spec, s).factor;
      ASSERT_GE(f, 0.7);
      ASSERT_LE(f, 1.3);
      const double expect = std::clamp(std::round(v * f), 0.0, 255.0);
      const auto out = ApplyTransform(in, TransformKind::kBrightnessJitter, spec, s);
      for (auto b : out.pixels.bytes()) ASSERT_EQ(b, expect) << v << " x " << f;
    }
  }
}

TEST(ApplyTransformTest, EveryKindKeepsShapeAndProvenance) {
  AugmentationSpec spec;
  spec.master_seed = 5;
  const auto in = Original(3);
  for (TransformKind k : kAllTransformKinds) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto out = ApplyTransform(in, k, spec, s * 7919 + 1);
      ASSERT_EQ(out.pixels.width(), 224) << TransformName(k);
      ASSERT_EQ(out.pixels.height(), 224);
      ASSERT_EQ(out.pixels.bytes().size(), 224u * 224 * 3);
      EXPECT_EQ(out.meta.origin, Origin::kAugmented);
      EXPECT_EQ(out.meta.parent_id, "orig");
      EXPECT_EQ(out.meta.transform_name, std::string(TransformName(k)));
      EXPECT_EQ(out.meta.label, in.meta.label);
      EXPECT_EQ(out.meta.patient_id, in.meta.patient_id);
      EXPECT_EQ(ApplyTransform(in, k, spec, s * 7919 + 1).pixels, out.pixels);
    }
  }
}

TEST(ApplyTransformTest, GeometryFillsByEdgeReplication) {
  // A constant image stays constant under any warp when exposed regions
  // replicate edges; black wedges would show up as zeros.
  AugmentationSpec spec;
  const auto in = MakeLesion("c", "p", ClassLabel::kOthers, testing::SolidImage(224, 224, 90, 140, 30));
  for (TransformKind k : {TransformKind::kRotFree, TransformKind::kTranslation, TransformKind::kShear,
                          TransformKind::kScaling, TransformKind::kRot90Multiple,
                          TransformKind::kSyntheticBlur}) {
    EXPECT_EQ(ApplyTransform(in, k, spec, 12345).pixels, in.pixels) << TransformName(k);
  }
}

TEST(ApplyTransformTest, RejectsChaining) {
  AugmentationSpec spec;
  const auto child = ApplyTransform(Original(), TransformKind::kShear, spec, 1);
  try {
    ApplyTransform(child, TransformKind::kShear, spec, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFailedPrecondition);
  }
}

TEST(TransformSeedTest, DependsOnAllThreeInputs) {
  const auto a = TransformSeed(1, "x", TransformKind::kShear);
  EXPECT_EQ(a, TransformSeed(1, "x", TransformKind::kShear));
  EXPECT_NE(a, TransformSeed(2, "x", TransformKind::kShear));
  EXPECT_NE(a, TransformSeed(1, "y", TransformKind::kShear));
  EXPECT_NE(a, TransformSeed(1, "x", TransformKind::kScaling));
}

class ExpandTest : public ::testing::Test {
 protected:
  TempDir dir_;
  DatasetManifest originals_ =
      testing::StoredManifest(dir_ / "orig", 5, 1, testing::ColorScheme::kPattern, 3);
};

TEST_F(ExpandTest, TenOriginalsBecome140) {
  AugmentationSpec spec;
  spec.master_seed = 9;
  FilePixelSource src;
  const auto out = ExpandDataset(originals_, spec, dir_ / "aug", src);
  ASSERT_EQ(originals_.size(), 10u);
  EXPECT_EQ(out.size(), 140u);

  std::map<std::string, std::set<std::string>> kinds;
  for (const auto& e : out.entries()) {
    if (e.meta.origin == Origin::kOriginal) continue;
    const ManifestEntry* parent = out.Find(*e.meta.parent_id);
    ASSERT_NE(parent, nullptr);
    EXPECT_EQ(parent->meta.origin, Origin::kOriginal);
    EXPECT_TRUE(kinds[*e.meta.parent_id].insert(*e.meta.transform_name).second);
  }
  EXPECT_EQ(kinds.size(), 10u);
  for (const auto& [parent, set] : kinds) EXPECT_EQ(set.size(), 13u) << parent;

  // The expanded manifest resolves every payload from its own directory.
  out.Write(dir_ / "aug" / "manifest.tsv");
  const auto back = DatasetManifest::Read(dir_ / "aug" / "manifest.tsv");
  for (const auto& e : back.entries()) ASSERT_TRUE(std::filesystem::exists(back.ResolvePath(e)));
  const auto s = Summarize(back);
  EXPECT_EQ(s.total.augmented_images, 140u);
}

TEST_F(ExpandTest, EmptyManifestStaysEmpty) {
  FilePixelSource src;
  EXPECT_TRUE(ExpandDataset(DatasetManifest(dir_.path()), AugmentationSpec{}, dir_ / "e", src).empty());
}

TEST_F(ExpandTest, ReproducibleAcrossRunsAndThreadCounts) {
  AugmentationSpec spec;
  spec.master_seed = 42;
  FilePixelSource src;
  const auto a = ExpandDataset(originals_, spec, dir_ / "a", src, {1});
  const auto b = ExpandDataset(originals_, spec, dir_ / "b", src, {4});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.entries()[i].meta, b.entries()[i].meta);
    if (a.entries()[i].meta.origin == Origin::kOriginal) continue;
    ASSERT_EQ(ReadFileBytes(a.ResolvePath(a.entries()[i])),
              ReadFileBytes(b.ResolvePath(b.entries()[i])));
  }
  spec.master_seed = 43;
  const auto c = ExpandDataset(originals_, spec, dir_ / "c", src);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.entries()[i].meta.origin == Origin::kOriginal) continue;
    differing += ReadFileBytes(a.ResolvePath(a.entries()[i])) !=
                 ReadFileBytes(c.ResolvePath(c.entries()[i]));
  }
  EXPECT_GT(differing, a.size() / 2);
}

TEST_F(ExpandTest, AddingAnImageLeavesOthersUnchanged) {
  AugmentationSpec spec;
  spec.master_seed = 8;
  FilePixelSource src;
  const auto a = ExpandDataset(originals_, spec, dir_ / "a", src);
  DatasetManifest more = originals_;
  more.Add(StoreImage(MakeLesion("extra", "mpx_p0", ClassLabel::kMonkeypox,
                                 testing::PatternImage(224, 224, 99)),
                      dir_ / "orig"));
  const auto b = ExpandDataset(more, spec, dir_ / "b", src);
  for (const auto& e : a.entries()) {
    if (e.meta.origin == Origin::kOriginal) continue;
    ASSERT_EQ(ReadFileBytes(a.ResolvePath(e)), ReadFileBytes(b.ResolvePath(*b.Find(e.meta.image_id))));
  }
}

TEST_F(ExpandTest, RefusesSecondExpansion) {
  FilePixelSource src;
  const auto once = ExpandDataset(originals_, AugmentationSpec{}, dir_ / "a", src);
  try {
    ExpandDataset(once, AugmentationSpec{}, dir_ / "b", src);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFailedPrecondition);
  }
}

}  // namespace
}  // namespace mpox
