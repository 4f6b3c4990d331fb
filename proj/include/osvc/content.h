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

#ifndef OSVC_CONTENT_H_
#define OSVC_CONTENT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "osvc/nn/graph.h"
#include "osvc/nn/layers.h"
#include "osvc/nn/parameters.h"
#include "osvc/types.h"

namespace osvc {

// Frames x D speaker-independent content features.
using ContentFeatures = Matrix;

struct ContentProviderConfig {
  std::string kind = "toy_encoder";  // "file" or "toy_encoder"
  int dim = 256;
  std::string checkpoint;  // toy_encoder only
  std::string directory;   // file only: holds <utt_id>.tensor

  void Validate() const;
  nlohmann::json ToJson() const;
  static ContentProviderConfig FromJson(const nlohmann::json& j);
};

// Maps `features` onto `frames` target frames at the pipeline frame shift by
// picking the nearest source frame in time.
Matrix ResampleNearest(const Matrix& features, double source_shift, int frames);

// Reads a tensor file, checks its width against `expected_dim` and, when
// `mel_frames` > 0, reconciles its length with the paired mel.
ContentFeatures LoadContentFeatures(const std::filesystem::path& path,
                                    int expected_dim, int mel_frames = 0);

struct ToyEncoderConfig {
  int dim = 256;  // penultimate width = content feature width
  int conv_channels = 64;
  int kernel = 5;
  int gru_hidden = 64;
  int epochs = 12;
  int batch_size = 16;
  int crop_frames = 64;
  double lr = 0.003;
  uint64_t seed = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ToyEncoderConfig FromJson(const nlohmann::json& j);
};

struct LabeledMel {
  MelSpectrogram mel;
  std::vector<int> labels;  // one class id per frame
};

// Frame classifier: two convolutions, a GRU, a tanh bottleneck of width
// `dim` (the content features) and a softmax layer over the symbols.
class ToyEncoder {
 public:
  static constexpr int kNumClasses = 6;  // five vowels and silence

  explicit ToyEncoder(const ToyEncoderConfig& config);

  const ToyEncoderConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  // Returns the bottleneck; `logits` receives the classifier output.
  nn::Var Forward(nn::Graph* g, nn::Var mel_norm, int batch,
                  nn::Var* logits) const;

  ContentFeatures Infer(const MelSpectrogram& mel) const;
  std::vector<int> Classify(const MelSpectrogram& mel) const;

  void Save(const std::filesystem::path& dir,
            const nlohmann::json& provenance) const;
  static ToyEncoder Load(const std::filesystem::path& dir);

 private:
  ToyEncoderConfig config_;
  nn::ParameterSet params_;
  nn::Conv1d conv0_;
  nn::Conv1d conv1_;
  nn::Gru gru_;
  nn::Linear bottleneck_;
  nn::Linear out_;
};

struct ToyTrainReport {
  std::vector<double> epoch_losses;
  double final_loss = 0.0;
  double heldout_accuracy = 0.0;
  int64_t heldout_frames = 0;
};

// Trains on `train` and reports frame accuracy on `heldout`.
ToyTrainReport TrainToyEncoder(const std::vector<LabeledMel>& train,
                               const std::vector<LabeledMel>& heldout,
                               ToyEncoder* encoder);

// Content features from a trained encoder checkpoint; checks the width.
ContentFeatures InferContent(const MelSpectrogram& mel,
                             const ToyEncoder& encoder, int expected_dim);

}  // namespace osvc

#endif  // OSVC_CONTENT_H_
