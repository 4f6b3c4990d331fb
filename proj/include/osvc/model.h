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

#ifndef OSVC_MODEL_H_
#define OSVC_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "osvc/dsp.h"
#include "osvc/nn/graph.h"
#include "osvc/nn/layers.h"
#include "osvc/nn/parameters.h"
#include "osvc/types.h"

namespace osvc {

// Parameter name prefixes of the four modules.
inline constexpr char kContentPrefix[] = "content.";
inline constexpr char kSpeakerPrefix[] = "speaker.";
inline constexpr char kProsodyPrefix[] = "prosody.";
inline constexpr char kConversionPrefix[] = "conversion.";

// Parameters updated during one-utterance adaptation: the conversion
// module's highway stack, bidirectional GRU and postnet.
const std::vector<std::string>& AdaptablePrefixes();

struct ModelConfig {
  int content_dim = 256;  // width of the incoming content features
  int num_speakers = 2;   // classifier outputs
  // Fixed affine normalisation of log-mel values inside the network.
  double mel_mean = -4.0;
  double mel_scale = 3.0;
  // Explicit prosody enters as ((lf0 - lf0_center * vuv) / lf0_scale, vuv,
  // energy), a fixed linear map of the raw features.
  double lf0_center = 5.3;
  double lf0_scale = 0.4;

  nn::PrenetSpec content_prenet;
  nn::CbhgSpec content_cbhg;
  nn::PrenetSpec decoder_prenet;
  int decoder_hidden = 256;
  nn::PostnetSpec decoder_postnet;

  nn::RefEncoderSpec speaker_encoder;
  std::vector<int> classifier_widths = {128, 128};

  nn::RefEncoderSpec prosody_encoder;

  nn::PrenetSpec conversion_prenet;
  nn::CbhgSpec conversion_cbhg;
  nn::PostnetSpec conversion_postnet;
  bool use_prosody = true;

  // Published widths (conv bank of 8 kernels).
  static ModelConfig Paper(int num_speakers);
  // Reduced widths that train in minutes on one CPU core.
  static ModelConfig Desk(int num_speakers, int content_dim = 64);
  // Every width <= 8; for gradient checks.
  static ModelConfig Tiny(int num_speakers, int content_dim = 6);

  int content_repr_dim() const { return content_cbhg.output_dim(); }
  int conversion_input_dim() const;
  // Recomputes the input widths implied by the other fields.
  void Finalize();
  void Validate() const;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

struct ContentGraphOutput {
  nn::Var repr;
  nn::Var mel_pre;
  nn::Var mel_post;
};

struct SpeakerGraphOutput {
  nn::Var embedding;
  nn::Var logits;
};

struct MelGraphOutput {
  nn::Var mel_pre;
  nn::Var mel_post;
};

// Frames x C content representation (content-module encoder output).
using ContentRepr = Matrix;

struct SpeakerEmbedding {
  RowVector embedding;
  RowVector logits;
};

struct ProsodyRepr {
  Matrix explicit_features;  // frames x 3 raw (lf0, vuv, energy)
  RowVector implicit;        // empty when the prosody module is disabled
};

struct ContentResult {
  ContentRepr repr;
  MelSpectrogram mel;
};

struct ConversionResult {
  MelSpectrogram mel_pre;
  MelSpectrogram mel_post;
};

class VcModel {
 public:
  VcModel(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  // Graph builders. Sequences are time-major with `batch` items.
  Matrix NormalizeMel(const Matrix& mel) const;
  Matrix NormalizeProsody(const Matrix& raw) const;
  nn::Var Denormalize(nn::Graph* g, nn::Var x) const;

  nn::Var ContentEncodeGraph(nn::Graph* g, nn::Var bn, int batch) const;
  // Teacher-forced decoder; `target_mel` is the raw log-mel target.
  ContentGraphOutput ContentGraph(nn::Graph* g, nn::Var bn,
                                  const Matrix& target_mel, int batch) const;
  SpeakerGraphOutput SpeakerGraph(nn::Graph* g, nn::Var mel_norm,
                                  int batch) const;
  nn::Var ProsodyGraph(nn::Graph* g, nn::Var bn, int batch) const;
  // Conversion split at the highway stack input. `explicit_norm` and
  // `implicit` are ignored when the prosody module is disabled.
  nn::Var ConversionToHighway(nn::Graph* g, nn::Var content,
                              nn::Var explicit_norm, nn::Var speaker,
                              nn::Var implicit, int batch) const;
  MelGraphOutput ConversionFromHighway(nn::Graph* g, nn::Var h,
                                       int batch) const;
  MelGraphOutput ConversionGraph(nn::Graph* g, nn::Var content,
                                 nn::Var explicit_norm, nn::Var speaker,
                                 nn::Var implicit, int batch) const;

  // Single-utterance inference.
  ContentResult ContentForward(const Matrix& bn) const;
  ContentRepr ContentEncode(const Matrix& bn) const;
  SpeakerEmbedding SpeakerForward(const MelSpectrogram& mel) const;
  ProsodyRepr ProsodyForward(const Matrix& bn,
                             const dsp::ProsodyFeatures& prosody) const;
  ConversionResult ConversionForward(const ContentRepr& content,
                                     const ProsodyRepr& prosody,
                                     const SpeakerEmbedding& speaker) const;

  // Checkpoint directory: model.json (config + provenance) and one tensor
  // file per parameter under params/.
  void Save(const std::filesystem::path& dir,
            const nlohmann::json& provenance) const;
  static VcModel Load(const std::filesystem::path& dir,
                      nlohmann::json* provenance = nullptr);

 private:
  ModelConfig config_;
  uint64_t seed_;
  nn::ParameterSet params_;

  nn::Prenet content_prenet_;
  nn::Cbhg content_cbhg_;
  nn::Prenet decoder_prenet_;
  nn::Gru decoder_gru_;
  nn::Linear decoder_out_;
  nn::Postnet decoder_postnet_;

  nn::ReferenceEncoder speaker_encoder_;
  std::vector<nn::Linear> classifier_;

  nn::ReferenceEncoder prosody_encoder_;

  nn::Prenet conversion_prenet_;
  nn::Cbhg conversion_cbhg_;
  nn::Linear conversion_out_;
  nn::Postnet conversion_postnet_;
};

// Reads model.json provenance without loading tensors.
nlohmann::json ReadCheckpointInfo(const std::filesystem::path& dir);

}  // namespace osvc

#endif  // OSVC_MODEL_H_
