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


#include "mpox/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include "mpox/codec.hpp"
#include "mpox/diag.hpp"
#include "mpox/error.hpp"
#include "mpox/hash.hpp"
#include "mpox/nn/loss.hpp"
#include "mpox/nn/optimizer.hpp"
#include "mpox/nn/weights_io.hpp"
#include "mpox/random.hpp"

namespace mpox {
namespace {

std::string JoinInts(std::span<const int> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string JoinDoubles(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += FormatDouble(values[i]);
  }
  return out;
}

int ToIntChecked(double v, std::string_view what) {
  if (!(std::isfinite(v)) || v != std::floor(v) || std::fabs(v) > 1e9) {
    Fail(ErrorCode::kInvalidArgument, std::string(what) + " must be integers");
  }
  return static_cast<int>(v);
}

/// Mean loss and accuracy of the model on `images`, inference mode.
std::pair<double, double> EvaluateSplit(const Classifier& model,
                                        const std::vector<LesionImage>& images) {
  if (images.empty()) return {0.0, 0.0};
  const std::size_t chunk = static_cast<std::size_t>(model.config().batch_size);
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<const LesionImage*> ptrs;
  std::vector<int> labels;
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    ptrs.clear();
    labels.clear();
    for (std::size_t i = start; i < std::min(images.size(), start + chunk); ++i) {
      ptrs.push_back(&images[i]);
      labels.push_back(static_cast<int>(LabelIndex(images[i].meta.label)));
    }
    const auto logits = model.network().Infer(model.MakeInput(ptrs));
    loss += nn::SoftmaxCrossEntropy(logits, labels) * static_cast<double>(ptrs.size());
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
      const float* z = logits.sample(static_cast<int>(i));
      const int pred = z[0] >= z[1] ? 0 : 1;
      correct += pred == labels[i] ? 1 : 0;
    }
  }
  const double n = static_cast<double>(images.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace

std::string_view FeaturePoolingName(FeaturePooling pooling) {
  return pooling == FeaturePooling::kFlatten ? "flatten" : "global_average";
}

FeaturePooling ParseFeaturePooling(std::string_view name) {
  if (name == "flatten") return FeaturePooling::kFlatten;
  if (name == "global_average") return FeaturePooling::kGlobalAverage;
  Fail(ErrorCode::kInvalidArgument,
       "unknown feature_pooling '" + std::string(name) + "'; expected flatten or global_average");
}

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorCode::kInvalidArgument, "model config: " + msg); };
  if (head_widths.empty()) bad("head_widths must not be empty");
  for (int w : head_widths) {
    if (w <= 0) bad("head_widths must be strictly positive");
  }
  if (head_dropouts.size() != head_widths.size()) {
    bad("head_dropouts needs one rate per head layer");
  }
  for (double d : head_dropouts) {
    if (!(d >= 0.0 && d < 1.0)) bad("head_dropouts must lie in [0, 1)");
  }
  if (output_classes != 2) bad("output_classes must be 2");
  if (batch_size < 1) bad("batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be positive");
  if (max_epochs < 1) bad("max_epochs must be at least 1");
  if (early_stop_patience < 1) bad("early_stop_patience must be at least 1");
  if (trainable_bottom_layers < 0) bad("trainable_bottom_layers must be non-negative");
}

ModelConfig ModelConfig::FromConfig(const KeyValueConfig& kv) {
  kv.RejectUnknownKeys({"backbone_id", "pretrained", "pretrained_weights",
                        "trainable_bottom_layers", "head_widths", "head_dropouts",
                        "output_classes", "learning_rate", "batch_size", "max_epochs",
                        "early_stop_patience", "seed", "feature_pooling"});
  ModelConfig c;
  c.backbone = nn::ParseBackboneId(kv.GetString("backbone_id"));
  c.seed = kv.GetU64("seed");
  if (kv.Has("pretrained")) c.pretrained = kv.GetBool("pretrained");
  if (kv.Has("pretrained_weights")) c.pretrained_weights = kv.GetString("pretrained_weights");
  if (kv.Has("trainable_bottom_layers")) {
    c.trainable_bottom_layers = static_cast<int>(kv.GetInt("trainable_bottom_layers"));
  }
  if (kv.Has("head_widths")) {
    c.head_widths.clear();
    for (double v : kv.GetDoubleList("head_widths")) {
      c.head_widths.push_back(ToIntChecked(v, "head_widths"));
    }
  }
  if (kv.Has("head_dropouts")) c.head_dropouts = kv.GetDoubleList("head_dropouts");
  if (kv.Has("output_classes")) c.output_classes = static_cast<int>(kv.GetInt("output_classes"));
  if (kv.Has("learning_rate")) c.learning_rate = kv.GetDouble("learning_rate");
  if (kv.Has("batch_size")) c.batch_size = static_cast<int>(kv.GetInt("batch_size"));
  if (kv.Has("max_epochs")) c.max_epochs = static_cast<int>(kv.GetInt("max_epochs"));
  if (kv.Has("early_stop_patience")) {
    c.early_stop_patience = static_cast<int>(kv.GetInt("early_stop_patience"));
  }
  if (kv.Has("feature_pooling")) c.feature_pooling = ParseFeaturePooling(kv.GetString("feature_pooling"));
  c.Validate();
  return c;
}

KeyValueConfig ModelConfig::ToConfig() const {
  KeyValueConfig kv;
  kv.Set("backbone_id", std::string(nn::BackboneName(backbone)));
  kv.Set("pretrained", pretrained ? "true" : "false");
  if (!pretrained_weights.empty()) kv.Set("pretrained_weights", pretrained_weights);
  kv.Set("trainable_bottom_layers", std::to_string(trainable_bottom_layers));
  kv.Set("head_widths", JoinInts(head_widths));
  kv.Set("head_dropouts", JoinDoubles(head_dropouts));
  kv.Set("output_classes", std::to_string(output_classes));
  kv.Set("learning_rate", FormatDouble(learning_rate));
  kv.Set("batch_size", std::to_string(batch_size));
  kv.Set("max_epochs", std::to_string(max_epochs));
  kv.Set("early_stop_patience", std::to_string(early_stop_patience));
  kv.Set("seed", std::to_string(seed));
  kv.Set("feature_pooling", std::string(FeaturePoolingName(feature_pooling)));
  return kv;
}

ModelConfig ModelConfig::Load(const std::filesystem::path& path) {
  return FromConfig(KeyValueConfig::Load(path));
}

void ModelConfig::Save(const std::filesystem::path& path) const {
  WriteTextFile(path, ToConfig().Serialize());
}

ModelConfig ModelConfig::TinyPreset(std::uint64_t seed) {
  ModelConfig c;
  c.backbone = BackboneId::kTinyTestCnn;
  c.head_widths = {64, 32, 16};
  c.learning_rate = 1e-3;
  c.max_epochs = 10;
  c.early_stop_patience = 3;
  c.seed = seed;
  return c;
}

std::uint64_t ModelConfig::Fingerprint() const {
  return StableHasher().Add(ToConfig().Serialize()).Digest();
}

std::size_t HeadParameterCount(std::size_t features, std::span<const int> widths,
                               int output_classes) {
  std::size_t total = 0;
  std::size_t in = features;
  for (int w : widths) {
    total += in * static_cast<std::size_t>(w) + static_cast<std::size_t>(w);
    in = static_cast<std::size_t>(w);
  }
  return total + in * static_cast<std::size_t>(output_classes) +
         static_cast<std::size_t>(output_classes);
}

std::filesystem::path PretrainedWeightsPath(const ModelConfig& config) {
  if (!config.pretrained_weights.empty()) return config.pretrained_weights;
  const std::string file = std::string(nn::BackboneName(config.backbone)) + ".mpxw";
  if (const char* dir = std::getenv("MPOX_WEIGHTS_DIR"); dir != nullptr && *dir != '\0') {
    return std::filesystem::path(dir) / file;
  }
  return std::filesystem::path("weights") / file;
}

// ---------------------------------------------------------------------------
// Classifier

Classifier::Classifier(ModelConfig config, nn::Network<float> net, int backbone_last)
    : config_(std::move(config)), net_(std::move(net)), backbone_last_(backbone_last) {}

Classifier Classifier::Build(const ModelConfig& config) { return Build(config, BuildOptions{}); }

Classifier Classifier::Build(const ModelConfig& config, BuildOptions options) {
  config.Validate();
  nn::Network<float> net({kImageSide, kImageSide, 3});
  const int last = nn::BuildBackbone(config.backbone, net);

  if (config.pretrained && options.load_pretrained) {
    if (config.backbone == BackboneId::kTinyTestCnn) {
      Fail(ErrorCode::kInvalidArgument, "tiny_test_cnn has no pretrained weights");
    }
    const auto path = PretrainedWeightsPath(config);
    const std::string name(nn::BackboneName(config.backbone));
    if (!std::filesystem::exists(path)) {
      Fail(ErrorCode::kNotFound,
           "pretrained weights for " + name + " not found at " + path.string() +
               "; fetch them with `python3 tools/export_keras_backbone.py " + name + " " +
               path.string() + "` (downloads the ImageNet weights through Keras) or set "
               "pretrained = false");
    }
    std::size_t backbone_tensors = 0;
    for (int i = 0; i <= last; ++i) backbone_tensors += net.node(i).layer->params().size();
    const std::size_t loaded = nn::LoadWeights(net, path, /*allow_missing=*/true);
    if (loaded != backbone_tensors) {
      Fail(ErrorCode::kDataLoss, path.string() + ": expected " + std::to_string(backbone_tensors) +
                                     " backbone tensors, found " + std::to_string(loaded));
    }
  } else {
    nn::InitializeParameters(net, 0, last, DeriveSeed(config.seed, "backbone_init"));
  }

  int x = last;
  if (config.feature_pooling == FeaturePooling::kGlobalAverage) {
    const nn::Shape& s = net.shape(x);
    nn::Pool2DOptions o;
    o.kind = nn::PoolKind::kAverage;
    o.size = std::max(s[0], s[1]);
    o.stride = o.size;
    o.mode = nn::PadMode::kSame;
    x = net.Emplace<nn::Pool2D<float>>("feature_pool", {x}, o);
  }
  x = net.Emplace<nn::Flatten<float>>("feature_flatten", {x});
  const int head_first = x + 1;
  for (std::size_t i = 0; i < config.head_widths.size(); ++i) {
    const std::string k = std::to_string(i + 1);
    const int in = net.shape(x)[0];
    x = net.Emplace<nn::Dense<float>>("head_dense" + k, {x}, in, config.head_widths[i]);
    x = net.Emplace<nn::Relu<float>>("head_relu" + k, {x});
    x = net.Emplace<nn::Dropout<float>>("head_dropout" + k, {x}, config.head_dropouts[i]);
  }
  x = net.Emplace<nn::Dense<float>>("head_logits", {x}, net.shape(x)[0], config.output_classes);
  net.set_output(x);
  nn::InitializeParameters(net, head_first, x, DeriveSeed(config.seed, "head_init"));

  for (int i = 0; i <= last; ++i) net.node(i).trainable = false;
  const auto weighted = nn::WeightedNodes(net, last);
  const std::size_t unfrozen =
      std::min(weighted.size(), static_cast<std::size_t>(config.trainable_bottom_layers));
  for (std::size_t k = weighted.size() - unfrozen; k < weighted.size(); ++k) {
    net.node(weighted[k]).trainable = true;
  }
  return Classifier(config, std::move(net), last);
}

std::size_t Classifier::feature_length() const {
  for (int i = backbone_last_ + 1; i < net_.size(); ++i) {
    if (net_.node(i).layer->kind() == "flatten") return net_.shape(i)[0];
  }
  return 0;
}

std::size_t Classifier::HeadParameterCount() const {
  return mpox::HeadParameterCount(feature_length(), config_.head_widths, config_.output_classes);
}

std::vector<int> Classifier::TrainableBackboneNodes() const {
  std::vector<int> out;
  for (int id : nn::WeightedNodes(net_, backbone_last_)) {
    if (net_.node(id).trainable) out.push_back(id);
  }
  return out;
}

nn::Tensor<float> Classifier::MakeInput(std::span<const LesionImage* const> images) const {
  nn::Tensor<float> t(static_cast<int>(images.size()), net_.input_shape());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& px = images[i]->pixels;
    if (px.width() != kImageSide || px.height() != kImageSide) {
      Fail(ErrorCode::kInvalidArgument,
           "image '" + images[i]->meta.image_id + "' is " + std::to_string(px.width()) + "x" +
               std::to_string(px.height()) + ", expected 224x224");
    }
    nn::PreprocessImage(config_.backbone, px, t.sample(static_cast<int>(i)));
  }
  return t;
}

std::vector<std::array<double, 2>> Classifier::Probabilities(const nn::Tensor<float>& input) const {
  const auto probs = nn::Softmax(net_.Infer(input));
  std::vector<std::array<double, 2>> out(static_cast<std::size_t>(probs.batch));
  for (int n = 0; n < probs.batch; ++n) {
    // Renormalize in double so rows sum to 1 well inside float rounding.
    const double a = probs.sample(n)[0];
    const double b = probs.sample(n)[1];
    out[n] = {a / (a + b), b / (a + b)};
  }
  return out;
}

ClassLabel ArgmaxLabel(const std::array<double, 2>& p) {
  return p[LabelIndex(ClassLabel::kMonkeypox)] >= p[LabelIndex(ClassLabel::kOthers)]
             ? ClassLabel::kMonkeypox
             : ClassLabel::kOthers;
}

PredictionBatch Predict(const Classifier& model, std::span<const LesionImage> images) {
  PredictionBatch out;
  out.reserve(images.size());
  const std::size_t chunk = static_cast<std::size_t>(model.config().batch_size);
  std::vector<const LesionImage*> ptrs;
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    ptrs.clear();
    for (std::size_t i = start; i < std::min(images.size(), start + chunk); ++i) {
      ptrs.push_back(&images[i]);
    }
    const auto probs = model.Probabilities(model.MakeInput(ptrs));
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
      out.push_back({ptrs[i]->meta.image_id, probs[i], ArgmaxLabel(probs[i])});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

std::string MakeVersionTag(const ModelConfig& config, int fold_index) {
  const std::uint64_t h = StableHasher()
                              .Add(config.Fingerprint())
                              .Add(static_cast<std::uint64_t>(fold_index))
                              .Digest();
  return std::string(nn::BackboneName(config.backbone)) + "-f" + std::to_string(fold_index) +
         "-" + ToHex64(h);
}

std::string FormatHistory(std::span<const EpochRecord> history) {
  std::string out = "# epoch\ttrain_loss\ttrain_accuracy\tval_loss\tval_accuracy\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "\t" + FormatDouble(r.train_loss) + "\t" +
           FormatDouble(r.train_accuracy) + "\t" + FormatDouble(r.val_loss) + "\t" +
           FormatDouble(r.val_accuracy) + "\n";
  }
  return out;
}

std::vector<EpochRecord> ParseHistory(std::string_view text, std::string_view origin) {
  std::vector<EpochRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    EpochRecord r;
    if (!(fields >> r.epoch >> r.train_loss >> r.train_accuracy >> r.val_loss >> r.val_accuracy)) {
      Fail(ErrorCode::kDataLoss,
           std::string(origin) + ":" + std::to_string(line_no) + ": malformed history record");
    }
    out.push_back(r);
  }
  return out;
}

void TrainedModel::Save(const std::filesystem::path& dir) const {
  if (!model) Fail(ErrorCode::kFailedPrecondition, "trained model has no weights");
  std::filesystem::create_directories(dir);
  config.Save(dir / "model.cfg");
  nn::SaveWeights(model->network(), dir / "weights.bin");
  WriteTextFile(dir / "history.tsv", FormatHistory(history));
  KeyValueConfig meta;
  meta.Set("version_tag", version_tag);
  meta.Set("name", name.empty() ? std::string(nn::BackboneName(config.backbone)) : name);
  meta.Set("backbone_id", std::string(nn::BackboneName(config.backbone)));
  meta.Set("fold_index", std::to_string(fold_index));
  meta.Set("best_epoch", std::to_string(best_epoch));
  WriteTextFile(dir / "meta.cfg", meta.Serialize());
}

TrainedModel TrainedModel::Load(const std::filesystem::path& dir) {
  TrainedModel m;
  m.config = ModelConfig::Load(dir / "model.cfg");
  const auto meta = KeyValueConfig::Load(dir / "meta.cfg");
  meta.RejectUnknownKeys({"version_tag", "name", "backbone_id", "fold_index", "best_epoch"});
  m.version_tag = meta.GetString("version_tag");
  m.name = meta.Has("name") ? meta.GetString("name")
                            : std::string(nn::BackboneName(m.config.backbone));
  m.fold_index = static_cast<int>(meta.GetInt("fold_index"));
  m.best_epoch = static_cast<int>(meta.GetInt("best_epoch"));
  m.history = ParseHistory(ReadTextFile(dir / "history.tsv"), (dir / "history.tsv").string());
  auto clf = Classifier::Build(m.config, {.load_pretrained = false});
  nn::LoadWeights(clf.network(), dir / "weights.bin");
  m.model = std::make_shared<Classifier>(std::move(clf));
  return m;
}

// ---------------------------------------------------------------------------
// Training

TrainedModel Train(Classifier model, const FoldAssignment& fold, int fold_index,
                   const DatasetManifest& manifest, PixelSource& pixels,
                   const TrainOptions& options) {
  const ModelConfig cfg = model.config();
  auto load = [&](const std::vector<std::string>& ids) {
    std::vector<LesionImage> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      const ManifestEntry& e = manifest.Get(id);
      out.push_back({e.meta, pixels.Load(manifest, e)});
    }
    return out;
  };

  for (ClassLabel label : kAllLabels) {
    const bool present = std::any_of(fold.train.begin(), fold.train.end(), [&](const std::string& id) {
      return manifest.Get(id).meta.label == label;
    });
    if (!present) {
      Fail(ErrorCode::kInvalidArgument, "fold " + std::to_string(fold_index) +
                                            ": train split has no " + std::string(LabelName(label)) +
                                            " images");
    }
  }
  const std::vector<LesionImage> train = load(fold.train);
  const std::vector<LesionImage> val = load(fold.val);
  if (val.empty()) {
    Warn("train", "fold " + std::to_string(fold_index) +
                      " has an empty val split; early stopping follows the train loss");
  }

  nn::Network<float>& net = model.network();
  const auto params = net.TrainableParameters();
  nn::Adam<float> adam({.learning_rate = cfg.learning_rate});
  const std::string fold_tag = "f" + std::to_string(fold_index);
  Rng dropout_rng(DeriveSeed(cfg.seed, "dropout", fold_tag));

  TrainedModel result;
  result.name = std::string(nn::BackboneName(cfg.backbone));
  result.config = cfg;
  result.fold_index = fold_index;
  result.version_tag = MakeVersionTag(cfg, fold_index);

  double best = std::numeric_limits<double>::infinity();
  std::vector<nn::NamedTensor> best_weights;
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::vector<const LesionImage*> batch;
  std::vector<int> labels;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(DeriveSeed(cfg.seed, "shuffle", fold_tag + "-e" + std::to_string(epoch)));
    shuffle.Shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t correct = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batch_index) {
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) {
        batch.push_back(&train[order[i]]);
        labels.push_back(static_cast<int>(LabelIndex(train[order[i]].meta.label)));
      }
      const auto input = model.MakeInput(batch);
      nn::Network<float>::TrainingPass pass;
      const auto logits = net.ForwardTrain(input, dropout_rng, pass);
      nn::Tensor<float> grad;
      const double loss = nn::SoftmaxCrossEntropy(logits, labels, &grad);
      if (!std::isfinite(loss)) {
        Fail(ErrorCode::kInternal, "non-finite training loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_index));
      }
      loss_sum += loss * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const float* z = logits.sample(static_cast<int>(i));
        correct += (z[0] >= z[1] ? 0 : 1) == labels[i] ? 1 : 0;
      }
      net.ZeroGrad();
      net.Backward(input, pass, grad);
      net.CommitStatistics(pass);
      adam.Step(params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    std::tie(rec.val_loss, rec.val_accuracy) = EvaluateSplit(model, val);
    if (!std::isfinite(rec.val_loss)) {
      Fail(ErrorCode::kInternal, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    const double monitored = val.empty() ? rec.train_loss : rec.val_loss;
    if (monitored < best) {
      best = monitored;
      result.best_epoch = epoch;
      best_weights = nn::ExportParameters(net);
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  nn::ImportParameters(net, best_weights);
  result.model = std::make_shared<Classifier>(std::move(model));
  return result;
}

}  // namespace mpox
