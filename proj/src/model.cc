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

#include "osvc/model.h"

#include <cmath>

#include "osvc/errors.h"
#include "osvc/file_util.h"

namespace osvc {

namespace {

using nn::Graph;
using nn::Var;

constexpr int kProsodyDims = 3;

Matrix SigmoidOf(const Matrix& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

}  // namespace

const std::vector<std::string>& AdaptablePrefixes() {
  static const std::vector<std::string> kPrefixes = {"conversion.cbhg.highway.",
                                                     "conversion.cbhg.bigru.",
                                                     "conversion.postnet."};
  return kPrefixes;
}

int ModelConfig::conversion_input_dim() const {
  int d = content_repr_dim() + speaker_encoder.output_dim();
  if (use_prosody) d += kProsodyDims + prosody_encoder.output_dim();
  return d;
}

void ModelConfig::Finalize() {
  content_prenet.input_dim = content_dim;
  content_cbhg.input_dim = content_prenet.output_dim();
  decoder_prenet.input_dim = kNumMels;
  decoder_postnet.dim = kNumMels;
  speaker_encoder.input_dim = kNumMels;
  prosody_encoder.input_dim = content_dim;
  conversion_prenet.input_dim = conversion_input_dim();
  conversion_cbhg.input_dim = conversion_prenet.output_dim();
  conversion_postnet.dim = kNumMels;
}

void ModelConfig::Validate() const {
  if (content_dim <= 0) throw InvalidArgument("content_dim must be positive");
  if (num_speakers < 1) throw InvalidArgument("num_speakers must be >= 1");
  if (decoder_hidden <= 0) {
    throw InvalidArgument("decoder_hidden must be positive");
  }
  if (!(mel_scale > 0.0) || !(lf0_scale > 0.0)) {
    throw InvalidArgument("normalisation scales must be positive");
  }
  for (int w : classifier_widths) {
    if (w <= 0) throw InvalidArgument("classifier widths must be positive");
  }
  ModelConfig f = *this;
  f.Finalize();
  if (f.content_prenet.input_dim != content_prenet.input_dim ||
      f.content_cbhg.input_dim != content_cbhg.input_dim ||
      f.prosody_encoder.input_dim != prosody_encoder.input_dim ||
      f.conversion_prenet.input_dim != conversion_prenet.input_dim ||
      f.conversion_cbhg.input_dim != conversion_cbhg.input_dim) {
    throw InvalidArgument("model config input widths are inconsistent");
  }
  content_prenet.Validate();
  content_cbhg.Validate();
  decoder_prenet.Validate();
  decoder_postnet.Validate();
  speaker_encoder.Validate();
  prosody_encoder.Validate();
  conversion_prenet.Validate();
  conversion_cbhg.Validate();
  conversion_postnet.Validate();
}

ModelConfig ModelConfig::Paper(int num_speakers) {
  ModelConfig c;
  c.num_speakers = num_speakers;
  c.content_dim = 256;
  c.content_prenet.widths = {256, 128};
  c.content_cbhg = nn::CbhgSpec{128, 8, 128, 128, 128, 4, 128};
  c.decoder_prenet.widths = {256, 128};
  c.decoder_prenet.dropout = 0.5;
  c.decoder_hidden = 256;
  c.decoder_postnet = nn::PostnetSpec{kNumMels, 256, 4, 3};
  c.conversion_prenet.widths = {80, 256};
  c.conversion_cbhg = nn::CbhgSpec{256, 8, 128, 256, 128, 4, 128};
  c.conversion_postnet = nn::PostnetSpec{kNumMels, 256, 4, 3};
  c.Finalize();
  return c;
}

ModelConfig ModelConfig::Desk(int num_speakers, int content_dim) {
  ModelConfig c;
  c.num_speakers = num_speakers;
  c.content_dim = content_dim;
  c.content_prenet.widths = {64, 64};
  c.content_cbhg = nn::CbhgSpec{64, 4, 16, 64, 64, 2, 32};
  c.decoder_prenet.widths = {64, 64};
  c.decoder_prenet.dropout = 0.5;
  c.decoder_hidden = 128;
  c.decoder_postnet = nn::PostnetSpec{kNumMels, 32, 2, 3};
  c.conversion_prenet.widths = {80, 256};
  c.conversion_cbhg = nn::CbhgSpec{256, 8, 16, 64, 64, 4, 64};
  c.conversion_postnet = nn::PostnetSpec{kNumMels, 64, 4, 3};
  c.Finalize();
  return c;
}

ModelConfig ModelConfig::Tiny(int num_speakers, int content_dim) {
  ModelConfig c;
  c.num_speakers = num_speakers;
  c.content_dim = content_dim;
  c.content_prenet.widths = {8, 6};
  c.content_cbhg = nn::CbhgSpec{6, 2, 3, 5, 4, 2, 3};
  c.decoder_prenet.widths = {8, 5};
  c.decoder_prenet.dropout = 0.0;
  c.decoder_hidden = 7;
  c.decoder_postnet = nn::PostnetSpec{kNumMels, 4, 2, 3};
  c.speaker_encoder.channels = {2, 2, 3, 3, 4, 4};
  c.speaker_encoder.gru_hidden = 5;
  c.classifier_widths = {6, 6};
  c.prosody_encoder.channels = {2, 2, 3, 3, 4, 4};
  c.prosody_encoder.gru_hidden = 4;
  c.conversion_prenet.widths = {8, 7};
  c.conversion_cbhg = nn::CbhgSpec{7, 3, 3, 5, 6, 2, 4};
  c.conversion_postnet = nn::PostnetSpec{kNumMels, 5, 2, 3};
  c.Finalize();
  return c;
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"content_dim", content_dim},
          {"num_speakers", num_speakers},
          {"mel_mean", mel_mean},
          {"mel_scale", mel_scale},
          {"lf0_center", lf0_center},
          {"lf0_scale", lf0_scale},
          {"content_prenet", content_prenet},
          {"content_cbhg", content_cbhg},
          {"decoder_prenet", decoder_prenet},
          {"decoder_hidden", decoder_hidden},
          {"decoder_postnet", decoder_postnet},
          {"speaker_encoder", speaker_encoder},
          {"classifier_widths", classifier_widths},
          {"prosody_encoder", prosody_encoder},
          {"conversion_prenet", conversion_prenet},
          {"conversion_cbhg", conversion_cbhg},
          {"conversion_postnet", conversion_postnet},
          {"use_prosody", use_prosody}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.content_dim = j.value("content_dim", c.content_dim);
    c.num_speakers = j.value("num_speakers", c.num_speakers);
    c.mel_mean = j.value("mel_mean", c.mel_mean);
    c.mel_scale = j.value("mel_scale", c.mel_scale);
    c.lf0_center = j.value("lf0_center", c.lf0_center);
    c.lf0_scale = j.value("lf0_scale", c.lf0_scale);
    c.content_prenet = j.value("content_prenet", c.content_prenet);
    c.content_cbhg = j.value("content_cbhg", c.content_cbhg);
    c.decoder_prenet = j.value("decoder_prenet", c.decoder_prenet);
    c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
    c.decoder_postnet = j.value("decoder_postnet", c.decoder_postnet);
    c.speaker_encoder = j.value("speaker_encoder", c.speaker_encoder);
    c.classifier_widths = j.value("classifier_widths", c.classifier_widths);
    c.prosody_encoder = j.value("prosody_encoder", c.prosody_encoder);
    c.conversion_prenet = j.value("conversion_prenet", c.conversion_prenet);
    c.conversion_cbhg = j.value("conversion_cbhg", c.conversion_cbhg);
    c.conversion_postnet = j.value("conversion_postnet", c.conversion_postnet);
    c.use_prosody = j.value("use_prosody", c.use_prosody);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad model config: ") + e.what());
  }
  c.Finalize();
  c.Validate();
  return c;
}

VcModel::VcModel(const ModelConfig& config, uint64_t seed)
    : config_(config), seed_(seed), params_(seed) {
  config_.Finalize();
  config_.Validate();
  nn::ParameterSet* p = &params_;
  content_prenet_ =
      nn::Prenet(p, "content.encoder.prenet", config_.content_prenet);
  content_cbhg_ = nn::Cbhg(p, "content.encoder.cbhg", config_.content_cbhg);
  decoder_prenet_ =
      nn::Prenet(p, "content.decoder.prenet", config_.decoder_prenet);
  decoder_gru_ =
      nn::Gru(p, "content.decoder.gru",
              config_.decoder_prenet.output_dim() + config_.content_repr_dim(),
              config_.decoder_hidden);
  decoder_out_ =
      nn::Linear(p, "content.decoder.out", config_.decoder_hidden, kNumMels);
  decoder_postnet_ =
      nn::Postnet(p, "content.decoder.postnet", config_.decoder_postnet);

  speaker_encoder_ =
      nn::ReferenceEncoder(p, "speaker.encoder", config_.speaker_encoder);
  int in = config_.speaker_encoder.output_dim();
  for (size_t i = 0; i < config_.classifier_widths.size(); ++i) {
    classifier_.emplace_back(p, "speaker.classifier." + std::to_string(i), in,
                             config_.classifier_widths[i]);
    in = config_.classifier_widths[i];
  }
  classifier_.emplace_back(
      p, "speaker.classifier." + std::to_string(classifier_.size()), in,
      config_.num_speakers);

  if (config_.use_prosody) {
    prosody_encoder_ =
        nn::ReferenceEncoder(p, "prosody.encoder", config_.prosody_encoder);
  }

  conversion_prenet_ =
      nn::Prenet(p, "conversion.prenet", config_.conversion_prenet);
  conversion_cbhg_ = nn::Cbhg(p, "conversion.cbhg", config_.conversion_cbhg);
  conversion_out_ = nn::Linear(p, "conversion.out",
                               config_.conversion_cbhg.output_dim(), kNumMels);
  conversion_postnet_ =
      nn::Postnet(p, "conversion.postnet", config_.conversion_postnet);
}

Matrix VcModel::NormalizeMel(const Matrix& mel) const {
  if (mel.cols() != kNumMels) {
    throw InvalidArgument("mel must have 80 columns, got " +
                          std::to_string(mel.cols()));
  }
  return ((mel.array() - config_.mel_mean) / config_.mel_scale).matrix();
}

Matrix VcModel::NormalizeProsody(const Matrix& raw) const {
  if (raw.cols() != kProsodyDims) {
    throw InvalidArgument("explicit prosody must have 3 columns");
  }
  Matrix out = raw;
  out.col(0) =
      (raw.col(0) - config_.lf0_center * raw.col(1)) / config_.lf0_scale;
  return out;
}

Var VcModel::Denormalize(Graph* g, Var x) const {
  return g->AffineScalar(x, config_.mel_scale, config_.mel_mean);
}

Var VcModel::ContentEncodeGraph(Graph* g, Var bn, int batch) const {
  return content_cbhg_.Forward(g, content_prenet_.Forward(g, bn), batch);
}

ContentGraphOutput VcModel::ContentGraph(Graph* g, Var bn,
                                         const Matrix& target_mel,
                                         int batch) const {
  ContentGraphOutput out;
  out.repr = ContentEncodeGraph(g, bn, batch);
  const Matrix target = NormalizeMel(target_mel);
  if (target.rows() != g->value(bn).rows()) {
    throw InvalidArgument("content target frame count mismatch");
  }
  // Previous frame as decoder input; a zero "go" frame starts each item.
  Matrix prev = Matrix::Zero(target.rows(), kNumMels);
  if (target.rows() > batch) {
    prev.bottomRows(target.rows() - batch) =
        target.topRows(target.rows() - batch);
  }
  Var dec_in = g->ConcatCols(
      {decoder_prenet_.Forward(g, g->Constant(std::move(prev))), out.repr});
  Var h = decoder_gru_.Forward(g, dec_in, batch, false);
  Var pre = decoder_out_.Forward(g, h);
  Var post = g->Add(pre, decoder_postnet_.Forward(g, pre, batch));
  out.mel_pre = Denormalize(g, pre);
  out.mel_post = Denormalize(g, post);
  return out;
}

SpeakerGraphOutput VcModel::SpeakerGraph(Graph* g, Var mel_norm,
                                         int batch) const {
  SpeakerGraphOutput out;
  out.embedding = speaker_encoder_.Forward(g, mel_norm, batch);
  Var x = out.embedding;
  for (size_t i = 0; i + 1 < classifier_.size(); ++i) {
    x = g->Relu(classifier_[i].Forward(g, x));
  }
  out.logits = classifier_.back().Forward(g, x);
  return out;
}

Var VcModel::ProsodyGraph(Graph* g, Var bn, int batch) const {
  if (!config_.use_prosody) {
    throw InvalidArgument("prosody module is disabled in this model");
  }
  return prosody_encoder_.Forward(g, bn, batch);
}

Var VcModel::ConversionToHighway(Graph* g, Var content, Var explicit_norm,
                                 Var speaker, Var implicit, int batch) const {
  const int64_t rows = g->value(content).rows();
  if (batch <= 0 || rows % batch != 0) {
    throw InvalidArgument("conversion: rows not divisible by batch");
  }
  const int steps = static_cast<int>(rows / batch);
  std::vector<Var> parts = {content};
  if (config_.use_prosody) {
    if (g->value(explicit_norm).rows() != rows) {
      throw InvalidArgument("conversion: content has " + std::to_string(rows) +
                            " rows but explicit prosody has " +
                            std::to_string(g->value(explicit_norm).rows()));
    }
    parts.push_back(explicit_norm);
  }
  parts.push_back(g->BroadcastSteps(speaker, steps));
  if (config_.use_prosody) parts.push_back(g->BroadcastSteps(implicit, steps));
  Var x = conversion_prenet_.Forward(g, g->ConcatCols(parts));
  return conversion_cbhg_.ForwardToHighway(g, x, batch);
}

MelGraphOutput VcModel::ConversionFromHighway(Graph* g, Var h,
                                              int batch) const {
  Var y = conversion_cbhg_.ForwardFromHighway(g, h, batch);
  Var pre = conversion_out_.Forward(g, y);
  Var post = g->Add(pre, conversion_postnet_.Forward(g, pre, batch));
  return {Denormalize(g, pre), Denormalize(g, post)};
}

MelGraphOutput VcModel::ConversionGraph(Graph* g, Var content,
                                        Var explicit_norm, Var speaker,
                                        Var implicit, int batch) const {
  return ConversionFromHighway(
      g,
      ConversionToHighway(g, content, explicit_norm, speaker, implicit, batch),
      batch);
}

ContentRepr VcModel::ContentEncode(const Matrix& bn) const {
  if (bn.rows() == 0 || bn.cols() != config_.content_dim) {
    throw InvalidArgument("content features must be frames x " +
                          std::to_string(config_.content_dim));
  }
  Graph g(false);
  return g.value(ContentEncodeGraph(&g, g.Constant(bn), 1));
}

ContentResult VcModel::ContentForward(const Matrix& bn) const {
  ContentResult result;
  result.repr = ContentEncode(bn);
  const int frames = static_cast<int>(bn.rows());

  // Free-running decoder, one frame at a time.
  const Matrix& w_ih = params_.Get("content.decoder.gru.w_ih")->value;
  const Matrix& b_ih = params_.Get("content.decoder.gru.b_ih")->value;
  const Matrix& w_hh = params_.Get("content.decoder.gru.w_hh")->value;
  const Matrix& b_hh = params_.Get("content.decoder.gru.b_hh")->value;
  const Matrix& w_out = params_.Get("content.decoder.out.weight")->value;
  const Matrix& b_out = params_.Get("content.decoder.out.bias")->value;
  const int hidden = config_.decoder_hidden;
  Matrix h = Matrix::Zero(1, hidden);
  Matrix prev = Matrix::Zero(1, kNumMels);
  Matrix pre(frames, kNumMels);
  for (int t = 0; t < frames; ++t) {
    Graph g(false);
    Matrix x(1, config_.decoder_prenet.output_dim() + result.repr.cols());
    x << g.value(decoder_prenet_.Forward(&g, g.Constant(prev))),
        result.repr.row(t);
    const Matrix gx = x * w_ih + b_ih;
    const Matrix gh = h * w_hh + b_hh;
    const Matrix r = SigmoidOf(gx.leftCols(hidden) + gh.leftCols(hidden));
    const Matrix z = SigmoidOf(gx.middleCols(hidden, hidden) +
                               gh.middleCols(hidden, hidden));
    const Matrix n = (gx.rightCols(hidden).array() +
                      r.array() * gh.rightCols(hidden).array())
                         .tanh()
                         .matrix();
    h = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
    prev = h * w_out + b_out;
    pre.row(t) = prev;
  }
  Graph g(false);
  Var p = g.Constant(pre);
  Var post = g.Add(p, decoder_postnet_.Forward(&g, p, 1));
  result.mel = g.value(Denormalize(&g, post));
  return result;
}

SpeakerEmbedding VcModel::SpeakerForward(const MelSpectrogram& mel) const {
  if (mel.rows() == 0) throw InvalidArgument("speaker reference mel is empty");
  Graph g(false);
  SpeakerGraphOutput out = SpeakerGraph(&g, g.Constant(NormalizeMel(mel)), 1);
  return {g.value(out.embedding).row(0), g.value(out.logits).row(0)};
}

ProsodyRepr VcModel::ProsodyForward(const Matrix& bn,
                                    const dsp::ProsodyFeatures& prosody) const {
  if (static_cast<int64_t>(prosody.num_frames()) != bn.rows()) {
    throw InvalidArgument("content features have " + std::to_string(bn.rows()) +
                          " frames but prosody has " +
                          std::to_string(prosody.num_frames()));
  }
  if (bn.rows() == 0) throw InvalidArgument("empty content features");
  ProsodyRepr repr;
  repr.explicit_features = prosody.AsMatrix();
  if (config_.use_prosody) {
    Graph g(false);
    repr.implicit = g.value(ProsodyGraph(&g, g.Constant(bn), 1)).row(0);
  }
  return repr;
}

ConversionResult VcModel::ConversionForward(
    const ContentRepr& content, const ProsodyRepr& prosody,
    const SpeakerEmbedding& speaker) const {
  if (content.cols() != config_.content_repr_dim()) {
    throw InvalidArgument("content representation width mismatch");
  }
  if (speaker.embedding.size() != config_.speaker_encoder.output_dim()) {
    throw InvalidArgument("speaker embedding width mismatch");
  }
  Graph g(false);
  Var explicit_norm;
  Var implicit;
  if (config_.use_prosody) {
    if (prosody.explicit_features.rows() != content.rows()) {
      throw InvalidArgument("prosody and content frame counts differ");
    }
    if (prosody.implicit.size() != config_.prosody_encoder.output_dim()) {
      throw InvalidArgument("implicit prosody width mismatch");
    }
    explicit_norm = g.Constant(NormalizeProsody(prosody.explicit_features));
    implicit = g.Constant(prosody.implicit);
  }
  MelGraphOutput out =
      ConversionGraph(&g, g.Constant(content), explicit_norm,
                      g.Constant(speaker.embedding), implicit, 1);
  return {g.value(out.mel_pre), g.value(out.mel_post)};
}

void VcModel::Save(const std::filesystem::path& dir,
                   const nlohmann::json& provenance) const {
  nlohmann::json j = {{"format", "osvc-checkpoint-1"},
                      {"seed", seed_},
                      {"config", config_.ToJson()},
                      {"provenance", provenance}};
  params_.Save(dir / "params");
  WriteFileAtomic(dir / "model.json", j.dump(2) + "\n");
}

nlohmann::json ReadCheckpointInfo(const std::filesystem::path& dir) {
  const auto path = dir / "model.json";
  if (!std::filesystem::exists(path)) {
    throw InvalidArgument("not a checkpoint directory: " + dir.string());
  }
  try {
    return nlohmann::json::parse(ReadFileBytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + path.string() + ": " + e.what());
  }
}

VcModel VcModel::Load(const std::filesystem::path& dir,
                      nlohmann::json* provenance) {
  const nlohmann::json j = ReadCheckpointInfo(dir);
  VcModel model(ModelConfig::FromJson(j.at("config")),
                j.value("seed", uint64_t{0}));
  model.params_.Load(dir / "params");
  if (provenance != nullptr)
    *provenance = j.value("provenance", nlohmann::json::object());
  return model;
}

}  // namespace osvc
