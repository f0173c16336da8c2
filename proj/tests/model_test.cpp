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
#include <regex>
#include <set>

#include "mpox/error.hpp"
#include "mpox/model.hpp"
#include "mpox/partitioning.hpp"
#include "test_util.hpp"

namespace mpox {
namespace {

using testing::ColorScheme;
using testing::TempDir;

ModelConfig Tiny(std::uint64_t seed = 1) {
  ModelConfig c = ModelConfig::TinyPreset(seed);
  c.max_epochs = 3;
  return c;
}

std::vector<float> BackboneValues(const Classifier& m) {
  std::vector<float> out;
  for (int i = 0; i <= m.backbone_output(); ++i) {
    for (const auto& p : m.network().node(i).layer->params()) {
      out.insert(out.end(), p.value.begin(), p.value.end());
    }
  }
  return out;
}

TEST(HeadTest, ParameterCountForResNetFeatures) {
  const int widths[] = {4096, 1072, 256};
  EXPECT_EQ(HeadParameterCount(2048, widths, 2), 13'059'890u);
  EXPECT_EQ(8'392'704u + 4'391'984u + 274'688u + 514u, 13'059'890u);
}

TEST(ModelConfigTest, DefaultsFromTheHeadDescription) {
  ModelConfig c;
  EXPECT_EQ(c.head_widths, (std::vector<int>{4096, 1072, 256}));
  EXPECT_EQ(c.head_dropouts, (std::vector<double>{0.3, 0.2, 0.15}));
  EXPECT_EQ(c.trainable_bottom_layers, 8);
  EXPECT_EQ(c.learning_rate, 1e-5);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_EQ(c.max_epochs, 50);
  EXPECT_EQ(c.early_stop_patience, 10);
}

TEST(ModelConfigTest, FileRoundTripAndValidation) {
  TempDir dir;
  ModelConfig c = Tiny(77);
  c.head_dropouts = {0.1, 0.0, 0.5};
  c.Save(dir / "m.cfg");
  EXPECT_EQ(ModelConfig::Load(dir / "m.cfg"), c);
  EXPECT_EQ(ModelConfig::Load(dir / "m.cfg").Fingerprint(), c.Fingerprint());

  EXPECT_THROW(ModelConfig::FromConfig(KeyValueConfig::Parse("seed = 1\n")), Error);
  EXPECT_THROW(ModelConfig::FromConfig(KeyValueConfig::Parse("backbone_id = vgg16\n")), Error);
  EXPECT_THROW(ModelConfig::FromConfig(
                   KeyValueConfig::Parse("backbone_id = vgg16\nseed = 1\nlearnin_rate = 1\n")),
               Error);
  for (auto mutate : std::vector<std::function<void(ModelConfig&)>>{
           [](ModelConfig& m) { m.head_widths = {4, 0, 2}; },
           [](ModelConfig& m) { m.head_dropouts = {0.1, 1.0, 0.2}; },
           [](ModelConfig& m) { m.output_classes = 3; },
           [](ModelConfig& m) { m.batch_size = 0; },
       }) {
    ModelConfig bad = Tiny();
    mutate(bad);
    EXPECT_THROW(bad.Validate(), Error);
  }
}

TEST(ClassifierTest, MissingPretrainedWeightsExplainFetch) {
  ModelConfig c;
  c.backbone = BackboneId::kVgg16;
  c.pretrained = true;
  c.pretrained_weights = "/nonexistent/vgg16.mpxw";
  try {
    Classifier::Build(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("export_keras_backbone.py"), std::string::npos);
  }
}

TEST(ClassifierTest, BatchOfSixteenGivesNormalizedRows) {
  const Classifier m = Classifier::Build(Tiny());
  EXPECT_EQ(m.feature_length(), 1568u);
  std::vector<LesionImage> imgs;
  for (int i = 0; i < 16; ++i) {
    imgs.push_back(testing::MakeLesion("i" + std::to_string(i), "p", ClassLabel::kOthers,
                                       testing::NoiseImage(224, 224, i)));
  }
  std::vector<const LesionImage*> ptrs;
  for (const auto& i : imgs) ptrs.push_back(&i);
  const auto probs = m.Probabilities(m.MakeInput(ptrs));
  ASSERT_EQ(probs.size(), 16u);
  for (const auto& row : probs) {
    EXPECT_NEAR(row[0] + row[1], 1.0, 1e-6);
    EXPECT_GE(row[0], 0.0);
    EXPECT_GE(row[1], 0.0);
  }
}

TEST(ClassifierTest, SingleImageMatchesBatchedInference) {
  const Classifier m = Classifier::Build(Tiny(3));
  std::vector<LesionImage> imgs;
  for (int i = 0; i < 16; ++i) {
    imgs.push_back(testing::MakeLesion("i" + std::to_string(i), "p", ClassLabel::kOthers,
                                       testing::PatternImage(224, 224, i)));
  }
  const auto batch = Predict(m, imgs);
  for (int i : {0, 7, 15}) {
    const auto alone = Predict(m, std::span<const LesionImage>(&imgs[i], 1));
    EXPECT_NEAR(alone[0].probabilities[0], batch[i].probabilities[0], 1e-5);
    EXPECT_EQ(alone[0].image_id, batch[i].image_id);
  }
}

TEST(ClassifierTest, WrongSizeNamesImage) {
  const Classifier m = Classifier::Build(Tiny());
  const LesionImage odd = testing::MakeLesion("odd_one", "p", ClassLabel::kOthers, Image(100, 224));
  try {
    Predict(m, std::span<const LesionImage>(&odd, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("odd_one"), std::string::npos);
  }
}

TEST(ClassifierTest, TrainableLayersAreTheDeepestWeightedOnes) {
  ModelConfig c = Tiny();
  c.trainable_bottom_layers = 1;
  const Classifier m = Classifier::Build(c);
  const auto nodes = m.TrainableBackboneNodes();
  ASSERT_EQ(nodes.size(), 1u);
  EXPECT_EQ(m.network().node(nodes[0]).name, "tiny_conv3");
  c.trainable_bottom_layers = 0;
  EXPECT_TRUE(Classifier::Build(c).TrainableBackboneNodes().empty());
}

TEST(ArgmaxTest, TiesGoToMonkeypox) {
  EXPECT_EQ(ArgmaxLabel({0.5, 0.5}), ClassLabel::kMonkeypox);
  EXPECT_EQ(ArgmaxLabel({0.49, 0.51}), ClassLabel::kOthers);
  EXPECT_EQ(ArgmaxLabel({0.9, 0.1}), ClassLabel::kMonkeypox);
}

TEST(VersionTagTest, Format) {
  const std::string tag = MakeVersionTag(Tiny(5), 2);
  EXPECT_TRUE(std::regex_match(tag, std::regex("tiny_test_cnn-f2-[0-9a-f]{16}"))) << tag;
  EXPECT_NE(tag, MakeVersionTag(Tiny(6), 2));
  EXPECT_NE(tag, MakeVersionTag(Tiny(5), 1));
}

TEST(HistoryTest, RoundTrip) {
  std::vector<EpochRecord> h = {{1, 0.7, 0.5, 0.69, 0.5}, {2, 0.31234567890123, 0.9, 0.2, 1.0}};
  EXPECT_EQ(ParseHistory(FormatHistory(h)), h);
}

/// A small red/green dataset and plan shared by the training tests.
class TrainingTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    manifest_ = new DatasetManifest(
        testing::StoredManifest(dir_->path() / "rg", 6, 2, ColorScheme::kRedGreen, 1));
    plan_ = new FoldPlan(MakeFolds(*manifest_, 3));
  }
  static void TearDownTestSuite() {
    delete plan_;
    delete manifest_;
    delete dir_;
  }
  static TempDir* dir_;
  static DatasetManifest* manifest_;
  static FoldPlan* plan_;
};
TempDir* TrainingTest::dir_ = nullptr;
DatasetManifest* TrainingTest::manifest_ = nullptr;
FoldPlan* TrainingTest::plan_ = nullptr;

TEST_F(TrainingTest, FrozenBackboneIsBitIdentical) {
  ModelConfig c = Tiny();
  c.trainable_bottom_layers = 0;
  c.max_epochs = 1;
  Classifier m = Classifier::Build(c);
  const auto before = BackboneValues(m);
  FilePixelSource px;
  const auto trained = Train(std::move(m), ResolveFold(*plan_, 0, *manifest_), 0, *manifest_, px);
  EXPECT_EQ(BackboneValues(*trained.model), before);

  c.trainable_bottom_layers = 1;
  Classifier partly = Classifier::Build(c);
  const auto start = BackboneValues(partly);
  const auto t2 = Train(std::move(partly), ResolveFold(*plan_, 0, *manifest_), 0, *manifest_, px);
  EXPECT_NE(BackboneValues(*t2.model), start);
}

TEST_F(TrainingTest, DeterministicHistoryAndNoTestReads) {
  const auto fold = ResolveFold(*plan_, 1, *manifest_);
  testing::RecordingPixelSource a, b;
  const auto r1 = Train(Classifier::Build(Tiny(9)), fold, 1, *manifest_, a);
  const auto r2 = Train(Classifier::Build(Tiny(9)), fold, 1, *manifest_, b);
  EXPECT_EQ(r1.history, r2.history);
  EXPECT_FALSE(r1.history.empty());
  EXPECT_EQ(r1.version_tag, r2.version_tag);

  const std::set<std::string> test(fold.test.begin(), fold.test.end());
  ASSERT_FALSE(a.loaded.empty());
  for (const auto& id : a.loaded) EXPECT_FALSE(test.count(id)) << id;
}

TEST_F(TrainingTest, RedGreenIsLearned) {
  FilePixelSource px;
  const auto fold = ResolveFold(*plan_, 2, *manifest_);
  ModelConfig c = ModelConfig::TinyPreset(4);
  c.max_epochs = 25;
  c.early_stop_patience = 25;
  const auto trained = Train(Classifier::Build(c), fold, 2, *manifest_, px);
  EXPECT_GE(trained.history.back().train_accuracy, 1.0);

  const LesionImage red = testing::MakeLesion("probe", "probe", ClassLabel::kMonkeypox,
                                              testing::SolidImage(224, 224, 255, 0, 0));
  const auto p = Predict(*trained.model, std::span<const LesionImage>(&red, 1));
  EXPECT_EQ(p[0].predicted, ClassLabel::kMonkeypox);
  EXPECT_GT(p[0].probabilities[0], 0.9);
}

TEST_F(TrainingTest, SaveLoadPreservesPredictions) {
  TempDir out;
  FilePixelSource px;
  auto trained = Train(Classifier::Build(Tiny(2)), ResolveFold(*plan_, 0, *manifest_), 0, *manifest_, px);
  trained.name = "tiny_x";
  trained.Save(out.path());
  const auto back = TrainedModel::Load(out.path());
  EXPECT_EQ(back.name, "tiny_x");
  EXPECT_EQ(back.version_tag, trained.version_tag);
  EXPECT_EQ(back.history, trained.history);
  EXPECT_EQ(back.best_epoch, trained.best_epoch);
  EXPECT_EQ(back.config, trained.config);
  std::vector<LesionImage> imgs;
  for (int i = 0; i < 3; ++i) {
    imgs.push_back(testing::MakeLesion("i" + std::to_string(i), "p", ClassLabel::kOthers,
                                       testing::PatternImage(224, 224, i)));
  }
  const auto a = Predict(*trained.model, imgs), b = Predict(*back.model, imgs);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i].probabilities, b[i].probabilities);
}

TEST_F(TrainingTest, RejectsSingleClassTrainSplit) {
  FoldAssignment fold = ResolveFold(*plan_, 0, *manifest_);
  std::erase_if(fold.train, [&](const std::string& id) {
    return manifest_->Get(id).meta.label == ClassLabel::kOthers;
  });
  FilePixelSource px;
  try {
    Train(Classifier::Build(Tiny()), fold, 0, *manifest_, px);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("Others"), std::string::npos);
  }
}

TEST_F(TrainingTest, NonFiniteLossAbortsWithPosition) {
  ModelConfig c = Tiny();
  c.learning_rate = 1e30;
  c.max_epochs = 5;
  FilePixelSource px;
  try {
    Train(Classifier::Build(c), ResolveFold(*plan_, 0, *manifest_), 0, *manifest_, px);
    FAIL() << "training survived a 1e30 learning rate";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInternal);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(UninformativeTrainingTest, FirstEpochLossNearLnTwo) {
  TempDir dir;
  const auto m = testing::StoredManifest(dir.path(), 6, 2, ColorScheme::kRandom, 8);
  const auto plan = MakeFolds(m, 1);
  ModelConfig c = ModelConfig::TinyPreset(11);
  c.max_epochs = 1;
  FilePixelSource px;
  const auto t = Train(Classifier::Build(c), ResolveFold(plan, 0, m), 0, m, px);
  EXPECT_NEAR(t.history[0].train_loss, std::log(2.0), 0.1);
}

}  // namespace
}  // namespace mpox
