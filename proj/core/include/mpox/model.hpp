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


#ifndef MPOX_MODEL_HPP_
#define MPOX_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpox/dataset.hpp"
#include "mpox/kv_config.hpp"
#include "mpox/nn/backbones.hpp"
#include "mpox/nn/network.hpp"
#include "mpox/partitioning.hpp"

namespace mpox {

using nn::BackboneId;

/// How the backbone's final feature map reaches the head.
enum class FeaturePooling { kFlatten, kGlobalAverage };

std::string_view FeaturePoolingName(FeaturePooling pooling);
FeaturePooling ParseFeaturePooling(std::string_view name);

struct ModelConfig {
  BackboneId backbone = BackboneId::kResNet50;
  bool pretrained = false;
  /// Weights blob for pretrained backbones; empty means
  /// $MPOX_WEIGHTS_DIR/<backbone>.mpxw (or ./weights/<backbone>.mpxw).
  std::string pretrained_weights;
  int trainable_bottom_layers = 8;
  std::vector<int> head_widths = {4096, 1072, 256};
  std::vector<double> head_dropouts = {0.3, 0.2, 0.15};
  int output_classes = 2;
  double learning_rate = 1e-5;
  int batch_size = 16;
  int max_epochs = 50;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
  FeaturePooling feature_pooling = FeaturePooling::kFlatten;

  void Validate() const;

  /// backbone_id and seed are mandatory; other keys default as above.
  static ModelConfig FromConfig(const KeyValueConfig& config);
  KeyValueConfig ToConfig() const;
  static ModelConfig Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  /// Desk-scale settings for the tiny backbone: narrow head, a learning
  /// rate that converges in a few epochs, short patience.
  static ModelConfig TinyPreset(std::uint64_t seed);

  /// Stable hash of every field.
  std::uint64_t Fingerprint() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Parameters of the fully connected head on `features` inputs.
std::size_t HeadParameterCount(std::size_t features, std::span<const int> widths,
                               int output_classes);

/// Where a pretrained backbone blob is looked up for `config`.
std::filesystem::path PretrainedWeightsPath(const ModelConfig& config);

/// Backbone plus classifier head, float precision. Inference is const and
/// safe to share between threads; training needs exclusive access.
class Classifier {
 public:
  struct BuildOptions {
    /// When false, pretrained weights are not read (the caller loads a
    /// full weights blob afterwards).
    bool load_pretrained = true;
  };

  static Classifier Build(const ModelConfig& config);
  static Classifier Build(const ModelConfig& config, BuildOptions options);

  const ModelConfig& config() const { return config_; }
  nn::Network<float>& network() { return net_; }
  const nn::Network<float>& network() const { return net_; }

  int backbone_output() const { return backbone_last_; }
  /// Length of the vector entering the first dense layer.
  std::size_t feature_length() const;
  std::size_t HeadParameterCount() const;

  /// Backbone node ids that take part in training.
  std::vector<int> TrainableBackboneNodes() const;

  /// Converts 224x224 images to the backbone's input tensor. Throws
  /// naming the first image with the wrong size.
  nn::Tensor<float> MakeInput(std::span<const LesionImage* const> images) const;

  /// Softmax probabilities, one row per image, (Monkeypox, Others).
  std::vector<std::array<double, 2>> Probabilities(const nn::Tensor<float>& input) const;

 private:
  Classifier(ModelConfig config, nn::Network<float> net, int backbone_last);

  ModelConfig config_;
  nn::Network<float> net_;
  int backbone_last_ = -1;
};

struct Prediction {
  std::string image_id;
  std::array<double, 2> probabilities{};
  ClassLabel predicted = ClassLabel::kMonkeypox;
};

using PredictionBatch = std::vector<Prediction>;

/// argmax over (Monkeypox, Others); ties go to Monkeypox.
ClassLabel ArgmaxLabel(const std::array<double, 2>& probabilities);

/// Inference with dropout disabled, in chunks of the configured batch size.
PredictionBatch Predict(const Classifier& model, std::span<const LesionImage> images);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainedModel {
  /// Run name used in reports; defaults to the backbone id.
  std::string name;
  ModelConfig config;
  int fold_index = 0;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  std::string version_tag;
  std::shared_ptr<Classifier> model;

  /// Writes model.cfg, weights.bin, history.tsv and meta.cfg into `dir`.
  void Save(const std::filesystem::path& dir) const;
  static TrainedModel Load(const std::filesystem::path& dir);
};

/// "<backbone>-f<fold>-<16 hex digits of the config fingerprint>".
std::string MakeVersionTag(const ModelConfig& config, int fold_index);

std::string FormatHistory(std::span<const EpochRecord> history);
std::vector<EpochRecord> ParseHistory(std::string_view text, std::string_view origin = "<history>");

struct TrainOptions {
  /// Called after every epoch, e.g. for progress output.
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Trains on the fold's train split and early-stops on its val split.
/// Pixels are read only for train and val ids, through `pixels`.
TrainedModel Train(Classifier model, const FoldAssignment& fold, int fold_index,
                   const DatasetManifest& manifest, PixelSource& pixels,
                   const TrainOptions& options = {});

}  // namespace mpox

#endif  // MPOX_MODEL_HPP_
