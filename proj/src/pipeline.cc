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

#include "osvc/pipeline.h"

#include <algorithm>
#include <fstream>

#include "osvc/dsp.h"
#include "osvc/errors.h"
#include "osvc/file_util.h"
#include "osvc/tensor_file.h"
#include "osvc/wav_io.h"

namespace osvc {

namespace fs = std::filesystem;

namespace {

fs::path Resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

ModelConfig ModelFromJson(const nlohmann::json& j) {
  const std::string preset = j.value("preset", std::string("desk"));
  ModelConfig base;
  if (preset == "desk") {
    base = ModelConfig::Desk(2, j.value("content_dim", 64));
  } else if (preset == "paper") {
    base = ModelConfig::Paper(2);
  } else {
    throw InvalidArgument("unknown model preset '" + preset + "'");
  }
  nlohmann::json merged = base.ToJson();
  nlohmann::json overrides = j;
  overrides.erase("preset");
  merged.merge_patch(overrides);
  return ModelConfig::FromJson(merged);
}

}  // namespace

RunConfig DeskRunConfig() {
  RunConfig c;
  c.content.dim = 64;
  c.toy_encoder.dim = 64;
  c.model = ModelConfig::Desk(6, 64);
  c.phase1.epochs = 10;
  c.phase1.finetune_epochs = 2;
  c.phase2.epochs = 50;
  c.phase3.steps = 500;
  return c;
}

void RunConfig::Validate() const {
  for (const auto& [name, p] :
       {std::pair<const char*, const fs::path*>{"corpus_dir", &corpus_dir},
        {"features_dir", &features_dir},
        {"checkpoint_dir", &checkpoint_dir},
        {"report_dir", &report_dir}}) {
    if (p->empty()) throw InvalidArgument(std::string(name) + " is empty");
  }
  content.Validate();
  toy_encoder.Validate();
  if (content.kind == "toy_encoder" && toy_encoder.dim != content.dim) {
    throw InvalidArgument(
        "toy_encoder.dim (" + std::to_string(toy_encoder.dim) +
        ") differs from content.dim (" + std::to_string(content.dim) + ")");
  }
  if (content.kind == "file" && content.directory.empty()) {
    throw InvalidArgument("content.directory is required for kind 'file'");
  }
  if (model.content_dim != content.dim) {
    throw InvalidArgument(
        "model.content_dim (" + std::to_string(model.content_dim) +
        ") differs from content.dim (" + std::to_string(content.dim) + ")");
  }
  model.Validate();
  phase1.Validate();
  phase2.Validate();
  phase3.Validate();
}

nlohmann::json RunConfig::ToJson() const {
  return {{"corpus_dir", corpus_dir.string()},
          {"features_dir", features_dir.string()},
          {"checkpoint_dir", checkpoint_dir.string()},
          {"report_dir", report_dir.string()},
          {"seed", seed},
          {"corpus", corpus.ToJson()},
          {"content", content.ToJson()},
          {"toy_encoder", toy_encoder.ToJson()},
          {"model", model.ToJson()},
          {"phase1", phase1.ToJson()},
          {"phase2", phase2.ToJson()},
          {"phase3", phase3.ToJson()}};
}

RunConfig RunConfig::FromJson(const nlohmann::json& j,
                              const fs::path& base_dir) {
  if (!j.is_object()) throw InvalidArgument("run config must be an object");
  RunConfig c = DeskRunConfig();
  try {
    c.corpus_dir =
        Resolve(base_dir, j.value("corpus_dir", c.corpus_dir.string()));
    c.features_dir =
        Resolve(base_dir, j.value("features_dir", c.features_dir.string()));
    c.checkpoint_dir =
        Resolve(base_dir, j.value("checkpoint_dir", c.checkpoint_dir.string()));
    c.report_dir =
        Resolve(base_dir, j.value("report_dir", c.report_dir.string()));
    c.seed = j.value("seed", c.seed);
    if (j.contains("corpus"))
      c.corpus = corpus::CorpusConfig::FromJson(j["corpus"]);
    if (j.contains("content")) {
      c.content = ContentProviderConfig::FromJson(j["content"]);
      if (!c.content.checkpoint.empty()) {
        c.content.checkpoint = Resolve(base_dir, c.content.checkpoint).string();
      }
      if (!c.content.directory.empty()) {
        c.content.directory = Resolve(base_dir, c.content.directory).string();
      }
      c.toy_encoder.dim = c.content.dim;
      c.model = ModelConfig::Desk(6, c.content.dim);
    }
    if (j.contains("toy_encoder")) {
      nlohmann::json t = c.toy_encoder.ToJson();
      t.merge_patch(j["toy_encoder"]);
      c.toy_encoder = ToyEncoderConfig::FromJson(t);
    }
    if (j.contains("model")) {
      nlohmann::json m = j["model"];
      if (!m.contains("content_dim")) m["content_dim"] = c.content.dim;
      c.model = ModelFromJson(m);
    }
    for (int phase = 1; phase <= 3; ++phase) {
      const std::string key = "phase" + std::to_string(phase);
      PhaseConfig* p = phase == 1   ? &c.phase1
                       : phase == 2 ? &c.phase2
                                    : &c.phase3;
      if (j.contains(key)) {
        nlohmann::json merged = p->ToJson();
        merged.merge_patch(j[key]);
        *p = PhaseConfig::FromJson(merged, phase);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad run config: ") + e.what());
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

std::string RunConfig::Hash() const { return Sha256Hex(ToJson().dump()); }

void LoadLabeledMels(const corpus::Manifest& manifest,
                     std::vector<LabeledMel>* train,
                     std::vector<LabeledMel>* heldout,
                     std::vector<std::string>* skipped) {
  if (manifest.records.empty()) {
    throw InvalidArgument("manifest has no utterances");
  }
  for (const corpus::ManifestRecord& r : manifest.records) {
    if (r.segments.empty()) {
      throw InvalidArgument("manifest row " + r.utt_id +
                            " has no segment labels");
    }
  }
  for (const corpus::ManifestRecord& r : manifest.records) {
    AudioClip audio;
    try {
      audio = ReadWav(manifest.AudioPath(r));
    } catch (const DataError&) {
      if (skipped) skipped->push_back(r.utt_id);
      continue;
    }
    LabeledMel lm;
    lm.mel = dsp::ComputeMel(audio);
    lm.labels =
        corpus::FrameLabels(r.segments, static_cast<int>(lm.mel.rows()));
    (r.split == "train" ? train : heldout)->push_back(std::move(lm));
  }
}

ToyEncoder TrainToyEncoderOnManifest(const corpus::Manifest& manifest,
                                     const ToyEncoderConfig& config,
                                     ToyTrainReport* report) {
  std::vector<LabeledMel> train, heldout;
  LoadLabeledMels(manifest, &train, &heldout);
  ToyEncoder encoder(config);
  ToyTrainReport r = TrainToyEncoder(train, heldout, &encoder);
  if (report) *report = r;
  return encoder;
}

FeatureFiles FeaturePathsFor(const fs::path& features_dir,
                             const std::string& utt_id) {
  return {features_dir / (utt_id + ".mel.tensor"),
          features_dir / (utt_id + ".prosody.tensor"),
          features_dir / (utt_id + ".content.tensor")};
}

namespace {

constexpr char kIndexName[] = "index.json";

std::string FileHash(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return {};
  return Sha256Hex(ReadFileBytes(p));
}

std::string ProviderKey(const ContentProviderConfig& provider,
                        const ToyEncoder* encoder) {
  if (provider.kind == "toy_encoder") {
    return "toy_encoder:" + std::to_string(provider.dim) + ":" +
           encoder->params().Checksum();
  }
  return "file:" + std::to_string(provider.dim) + ":" + provider.directory;
}

}  // namespace

FeatureReport ExtractFeatures(const corpus::Manifest& manifest,
                              const fs::path& features_dir,
                              const ContentProviderConfig& provider,
                              const ToyEncoder* encoder) {
  provider.Validate();
  if (provider.kind == "toy_encoder") {
    if (encoder == nullptr) {
      throw InvalidArgument("toy_encoder provider needs a trained encoder");
    }
    if (encoder->config().dim != provider.dim) {
      throw InvalidArgument(
          "encoder width " + std::to_string(encoder->config().dim) +
          " differs from provider dim " + std::to_string(provider.dim));
    }
  }
  std::error_code ec;
  fs::create_directories(features_dir, ec);
  if (ec) {
    throw InvalidArgument("cannot create " + features_dir.string() + ": " +
                          ec.message());
  }
  const fs::path index_path = features_dir / kIndexName;
  nlohmann::json index = nlohmann::json::object();
  if (fs::exists(index_path)) {
    try {
      index = nlohmann::json::parse(ReadFileBytes(index_path));
    } catch (const nlohmann::json::exception&) {
      index = nlohmann::json::object();  // rebuild everything
    }
  }
  const std::string key = ProviderKey(provider, encoder);

  FeatureReport report;
  for (const corpus::ManifestRecord& r : manifest.records) {
    const FeatureFiles files = FeaturePathsFor(features_dir, r.utt_id);
    std::string wav_bytes;
    try {
      wav_bytes = ReadFileBytes(manifest.AudioPath(r));
    } catch (const std::exception& e) {
      report.failed.push_back(r.utt_id + ": " + e.what());
      continue;
    }
    const std::string wav_hash = Sha256Hex(wav_bytes);
    if (index.contains(r.utt_id)) {
      const nlohmann::json& e = index[r.utt_id];
      if (e.value("wav", "") == wav_hash && e.value("provider", "") == key &&
          e.value("mel", "") == FileHash(files.mel) &&
          e.value("prosody", "") == FileHash(files.prosody) &&
          e.value("content", "") == FileHash(files.content)) {
        report.skipped.push_back(r.utt_id);
        continue;
      }
    }
    try {
      const AudioClip audio = DecodeWav(wav_bytes);
      const MelSpectrogram mel = dsp::ComputeMel(audio);
      const Matrix prosody = dsp::ExtractProsody(audio).AsMatrix();
      ContentFeatures bn;
      if (provider.kind == "toy_encoder") {
        bn = InferContent(mel, *encoder, provider.dim);
      } else {
        bn = LoadContentFeatures(
            fs::path(provider.directory) / (r.utt_id + ".tensor"), provider.dim,
            static_cast<int>(mel.rows()));
      }
      const std::string mel_bytes = EncodeTensor(MatrixRecord("mel", mel));
      const std::string pro_bytes =
          EncodeTensor(MatrixRecord("prosody", prosody));
      const std::string bn_bytes = EncodeTensor(MatrixRecord("content", bn));
      WriteFileAtomic(files.mel, mel_bytes);
      WriteFileAtomic(files.prosody, pro_bytes);
      WriteFileAtomic(files.content, bn_bytes);
      index[r.utt_id] = {{"wav", wav_hash},
                         {"provider", key},
                         {"mel", Sha256Hex(mel_bytes)},
                         {"prosody", Sha256Hex(pro_bytes)},
                         {"content", Sha256Hex(bn_bytes)}};
      report.written.push_back(r.utt_id);
    } catch (const DataError& e) {
      index.erase(r.utt_id);
      report.failed.push_back(r.utt_id + ": " + e.what());
    }
  }
  if (!report.written.empty() || !report.failed.empty()) {
    WriteFileAtomic(index_path, index.dump(1));
  }
  return report;
}

Dataset LoadDataset(const corpus::Manifest& manifest,
                    const fs::path& features_dir, int content_dim) {
  Dataset data;
  data.utterances.reserve(manifest.records.size());
  for (const corpus::ManifestRecord& r : manifest.records) {
    const FeatureFiles files = FeaturePathsFor(features_dir, r.utt_id);
    UtteranceData u;
    u.utt_id = r.utt_id;
    u.speaker = r.speaker;
    u.speaker_index = r.speaker_index;
    u.item = r.item;
    u.split = r.split;
    try {
      u.mel = RecordToMatrix(ReadTensorFile(files.mel));
      u.prosody = RecordToMatrix(ReadTensorFile(files.prosody));
    } catch (const InvalidArgument& e) {
      throw DataError(r.utt_id + ": " + e.what());
    }
    u.bn = LoadContentFeatures(files.content, content_dim,
                               static_cast<int>(u.mel.rows()));
    if (u.mel.cols() != kNumMels || u.prosody.cols() != 3 ||
        u.prosody.rows() != u.mel.rows()) {
      throw DataError(r.utt_id + ": inconsistent feature shapes");
    }
    data.utterances.push_back(std::move(u));
  }
  return data;
}

int EvalPlan::ResolveTarget(const corpus::Manifest& manifest) const {
  if (target_speaker >= 0) return target_speaker;
  const std::vector<int> held = manifest.HeldOutSpeakers();
  if (held.empty()) throw InvalidArgument("corpus has no held-out speaker");
  return held.front();
}

std::vector<EvalPair> BuildEvalPairs(const corpus::Manifest& manifest,
                                     const Dataset& data,
                                     const EvalPlan& plan) {
  const int target = plan.ResolveTarget(manifest);
  std::vector<EvalPair> pairs;
  for (int s : plan.source_speakers) {
    for (int item : plan.items) {
      const corpus::ManifestRecord* rec = manifest.Find(s, item);
      const UtteranceData* u = data.Find(s, item);
      if (rec == nullptr || u == nullptr) {
        throw InvalidArgument("no utterance for speaker " + std::to_string(s) +
                              " item " + std::to_string(item));
      }
      EvalPair p;
      p.pair_id = rec->utt_id;
      p.source_speaker = rec->speaker;
      p.source_audio = ReadWav(manifest.AudioPath(*rec));
      p.source_bn = u->bn;
      if (const UtteranceData* gt = data.Find(target, item)) {
        p.ground_truth = gt->mel;
      }
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

AudioClip ConcatenateTargetAudio(const corpus::Manifest& manifest,
                                 const EvalPlan& plan) {
  const int target = plan.ResolveTarget(manifest);
  AudioClip out;
  for (int item : plan.sweep_items) {
    const corpus::ManifestRecord* rec = manifest.Find(target, item);
    if (rec == nullptr) {
      throw InvalidArgument("target speaker has no item " +
                            std::to_string(item));
    }
    const AudioClip clip = ReadWav(manifest.AudioPath(*rec));
    out.samples.insert(out.samples.end(), clip.samples.begin(),
                       clip.samples.end());
  }
  return out;
}

}  // namespace osvc
