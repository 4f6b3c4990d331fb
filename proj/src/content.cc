// Copyright (c) 2026 The osvc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "osvc/content.h"

#include <algorithm>
#include <cmath>

#include "osvc/batching.h"
#include "osvc/errors.h"
#include "osvc/file_util.h"
#include "osvc/nn/optimizer.h"
#include "osvc/tensor_file.h"

namespace osvc {

namespace {

// Same fixed normalisation as the conversion model.
constexpr double kMelMean = -4.0;
constexpr double kMelScale = 3.0;

Matrix NormalizeMel(const Matrix& mel) {
  return ((mel.array() - kMelMean) / kMelScale).matrix();
}

}  // namespace

void ContentProviderConfig::Validate() const {
  if (kind != "file" && kind != "toy_encoder") {
    throw InvalidArgument(
        "content provider kind must be file or toy_encoder, got '" + kind +
        "'");
  }
  if (dim <= 0) throw InvalidArgument("content provider dim must be positive");
}

nlohmann::json ContentProviderConfig::ToJson() const {
  return {{"kind", kind},
          {"dim", dim},
          {"checkpoint", checkpoint},
          {"directory", directory}};
}

ContentProviderConfig ContentProviderConfig::FromJson(const nlohmann::json& j) {
  ContentProviderConfig c;
  c.kind = j.value("kind", c.kind);
  c.dim = j.value("dim", c.dim);
  c.checkpoint = j.value("checkpoint", c.checkpoint);
  c.directory = j.value("directory", c.directory);
  c.Validate();
  return c;
}

Matrix ResampleNearest(const Matrix& features, double source_shift,
                       int frames) {
  if (features.rows() == 0) throw InvalidArgument("no frames to resample");
  if (frames <= 0) throw InvalidArgument("target frame count must be positive");
  if (!(source_shift > 0.0)) source_shift = kFrameShiftSeconds;
  Matrix out(frames, features.cols());
  const int64_t last = features.rows() - 1;
  for (int t = 0; t < frames; ++t) {
    const double pos = t * kFrameShiftSeconds / source_shift;
    const int64_t src = std::min<int64_t>(last, std::llround(pos));
    out.row(t) = features.row(src);
  }
  return out;
}

ContentFeatures LoadContentFeatures(const std::filesystem::path& path,
                                    int expected_dim, int mel_frames) {
  const TensorRecord record = ReadTensorFile(path);
  Matrix m = RecordToMatrix(record);
  if (m.cols() != expected_dim) {
    throw InvalidArgument("content features " + path.string() + " have dim " +
                          std::to_string(m.cols()) + ", config expects " +
                          std::to_string(expected_dim));
  }
  if (m.rows() == 0)
    throw DataError("content features " + path.string() + " are empty");
  if (mel_frames > 0 &&
      (m.rows() != mel_frames ||
       std::abs(record.frame_shift - kFrameShiftSeconds) > 1e-9)) {
    m = ResampleNearest(m, record.frame_shift, mel_frames);
  }
  return m;
}

void ToyEncoderConfig::Validate() const {
  if (dim <= 0 || conv_channels <= 0 || kernel <= 0 || gru_hidden <= 0 ||
      epochs <= 0 || batch_size <= 0 || crop_frames <= 0 || !(lr > 0.0)) {
    throw InvalidArgument("toy encoder config values must be positive");
  }
}

nlohmann::json ToyEncoderConfig::ToJson() const {
  return {{"dim", dim},
          {"conv_channels", conv_channels},
          {"kernel", kernel},
          {"gru_hidden", gru_hidden},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"crop_frames", crop_frames},
          {"lr", lr},
          {"seed", seed}};
}

ToyEncoderConfig ToyEncoderConfig::FromJson(const nlohmann::json& j) {
  ToyEncoderConfig c;
  c.dim = j.value("dim", c.dim);
  c.conv_channels = j.value("conv_channels", c.conv_channels);
  c.kernel = j.value("kernel", c.kernel);
  c.gru_hidden = j.value("gru_hidden", c.gru_hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.crop_frames = j.value("crop_frames", c.crop_frames);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

ToyEncoder::ToyEncoder(const ToyEncoderConfig& config)
    : config_(config), params_(config.seed) {
  config_.Validate();
  conv0_ = nn::Conv1d(&params_, "toy.conv.0", kNumMels, config_.conv_channels,
                      config_.kernel);
  conv1_ = nn::Conv1d(&params_, "toy.conv.1", config_.conv_channels,
                      config_.conv_channels, config_.kernel);
  gru_ =
      nn::Gru(&params_, "toy.gru", config_.conv_channels, config_.gru_hidden);
  bottleneck_ =
      nn::Linear(&params_, "toy.bottleneck", config_.gru_hidden, config_.dim);
  out_ = nn::Linear(&params_, "toy.out", config_.dim, kNumClasses);
}

nn::Var ToyEncoder::Forward(nn::Graph* g, nn::Var mel_norm, int batch,
                            nn::Var* logits) const {
  nn::Var x = g->Relu(conv0_.Forward(g, mel_norm, batch));
  x = g->Relu(conv1_.Forward(g, x, batch));
  x = gru_.Forward(g, x, batch, false);
  nn::Var bn = g->Tanh(bottleneck_.Forward(g, x));
  if (logits != nullptr) *logits = out_.Forward(g, bn);
  return bn;
}

ContentFeatures ToyEncoder::Infer(const MelSpectrogram& mel) const {
  if (mel.rows() == 0 || mel.cols() != kNumMels) {
    throw InvalidArgument("toy encoder needs a non-empty frames x 80 mel");
  }
  nn::Graph g(false);
  return g.value(Forward(&g, g.Constant(NormalizeMel(mel)), 1, nullptr));
}

std::vector<int> ToyEncoder::Classify(const MelSpectrogram& mel) const {
  nn::Graph g(false);
  nn::Var logits;
  Forward(&g, g.Constant(NormalizeMel(mel)), 1, &logits);
  const Matrix& l = g.value(logits);
  std::vector<int> out(l.rows());
  for (int64_t t = 0; t < l.rows(); ++t) l.row(t).maxCoeff(&out[t]);
  return out;
}

void ToyEncoder::Save(const std::filesystem::path& dir,
                      const nlohmann::json& provenance) const {
  params_.Save(dir / "params");
  nlohmann::json j = {{"format", "osvc-toy-encoder-1"},
                      {"config", config_.ToJson()},
                      {"provenance", provenance}};
  WriteFileAtomic(dir / "encoder.json", j.dump(2) + "\n");
}

ToyEncoder ToyEncoder::Load(const std::filesystem::path& dir) {
  const auto path = dir / "encoder.json";
  if (!std::filesystem::exists(path)) {
    throw InvalidArgument("not a toy encoder checkpoint: " + dir.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFileBytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + path.string() + ": " + e.what());
  }
  ToyEncoder enc(ToyEncoderConfig::FromJson(j.at("config")));
  enc.params_.Load(dir / "params");
  return enc;
}

ToyTrainReport TrainToyEncoder(const std::vector<LabeledMel>& train,
                               const std::vector<LabeledMel>& heldout,
                               ToyEncoder* encoder) {
  if (train.empty()) throw InvalidArgument("toy encoder: empty training set");
  const ToyEncoderConfig& cfg = encoder->config();
  std::vector<Matrix> mels;
  std::vector<Matrix> labels;  // frames x 1, stored as doubles for gathering
  std::vector<int> lengths;
  int min_len = 1 << 30;
  for (const auto& ex : train) {
    if (ex.mel.rows() == 0 ||
        static_cast<int64_t>(ex.labels.size()) != ex.mel.rows()) {
      throw InvalidArgument("toy encoder: every frame needs a label");
    }
    mels.push_back(NormalizeMel(ex.mel));
    Matrix l(ex.mel.rows(), 1);
    for (size_t t = 0; t < ex.labels.size(); ++t) l(t, 0) = ex.labels[t];
    labels.push_back(std::move(l));
    lengths.push_back(static_cast<int>(ex.mel.rows()));
    min_len = std::min(min_len, lengths.back());
  }
  const int crop = std::min(cfg.crop_frames, min_len);

  std::mt19937_64 rng(cfg.seed);
  nn::Adam adam;
  ToyTrainReport report;
  nn::ParameterSet& params = encoder->params();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<Chunk> chunks = EpochChunks(lengths, crop, rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (size_t b0 = 0; b0 < chunks.size(); b0 += cfg.batch_size) {
      const size_t b1 = std::min(chunks.size(), b0 + cfg.batch_size);
      std::vector<const Matrix*> xs;
      std::vector<const Matrix*> ys;
      std::vector<int> starts;
      for (size_t i = b0; i < b1; ++i) {
        xs.push_back(&mels[chunks[i].item]);
        ys.push_back(&labels[chunks[i].item]);
        starts.push_back(chunks[i].start);
      }
      const int batch = static_cast<int>(xs.size());
      const Matrix y = GatherTimeMajor(ys, starts, crop);
      std::vector<int> target(y.rows());
      for (int64_t r = 0; r < y.rows(); ++r)
        target[r] = static_cast<int>(y(r, 0));
      nn::Graph g(true);
      nn::Var logits;
      encoder->Forward(&g, g.Constant(GatherTimeMajor(xs, starts, crop)), batch,
                       &logits);
      nn::Var loss = g.CrossEntropy(logits, target);
      params.ZeroGrad();
      g.Backward(loss);
      adam.Step(&params, cfg.lr);
      loss_sum += g.value(loss)(0, 0);
      ++batches;
    }
    report.epoch_losses.push_back(loss_sum / batches);
  }
  report.final_loss = report.epoch_losses.back();

  int64_t correct = 0;
  for (const auto& ex : heldout) {
    const std::vector<int> pred = encoder->Classify(ex.mel);
    for (size_t t = 0; t < pred.size() && t < ex.labels.size(); ++t) {
      correct += pred[t] == ex.labels[t];
      ++report.heldout_frames;
    }
  }
  if (report.heldout_frames > 0) {
    report.heldout_accuracy =
        static_cast<double>(correct) / report.heldout_frames;
  }
  return report;
}

ContentFeatures InferContent(const MelSpectrogram& mel,
                             const ToyEncoder& encoder, int expected_dim) {
  if (encoder.config().dim != expected_dim) {
    throw InvalidArgument("toy encoder produces dim " +
                          std::to_string(encoder.config().dim) + " but " +
                          std::to_string(expected_dim) + " was requested");
  }
  return encoder.Infer(mel);
}

}  // namespace osvc
