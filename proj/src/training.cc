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

#include "osvc/training.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "osvc/batching.h"
#include "osvc/errors.h"
#include "osvc/file_util.h"
#include "osvc/nn/graph.h"
#include "osvc/nn/optimizer.h"
#include "osvc/random.h"

namespace osvc {

namespace {

using nn::Graph;
using nn::Var;

nn::Var ReconsGraph(Graph* g, const MelGraphOutput& out, const Matrix& target) {
  return g->Add(g->L1Loss(out.mel_pre, target),
                g->L1Loss(out.mel_post, target));
}

std::string ChecksumOf(const nn::ParameterSet& params,
                       const std::vector<std::string>& names) {
  std::string all;
  for (const auto& n : names) {
    const Matrix& v = params.Get(n)->value;
    all += n;
    all.push_back('\0');
    all.append(reinterpret_cast<const char*>(v.data()),
               v.size() * sizeof(double));
  }
  return Sha256Hex(all);
}

int MinFrames(const std::vector<const UtteranceData*>& utts) {
  int n = 1 << 30;
  for (const auto* u : utts) n = std::min(n, u->num_frames());
  return n;
}

void CheckAligned(const UtteranceData& u) {
  if (u.mel.rows() == 0 || u.prosody.rows() != u.mel.rows() ||
      u.bn.rows() != u.mel.rows()) {
    throw InvalidArgument("utterance " + u.utt_id +
                          " has misaligned or empty features");
  }
}

}  // namespace

const UtteranceData* Dataset::Find(int speaker_index, int item) const {
  for (const auto& u : utterances) {
    if (u.speaker_index == speaker_index && u.item == item) return &u;
  }
  return nullptr;
}

std::vector<int> Dataset::TrainSpeakers() const {
  std::set<int> s;
  for (const auto& u : utterances) {
    if (u.split == "train") s.insert(u.speaker_index);
  }
  return {s.begin(), s.end()};
}

void PhaseConfig::Validate() const {
  if (phase < 1 || phase > 3) throw InvalidArgument("phase must be 1, 2 or 3");
  if (epochs <= 0 || steps <= 0 || batch_size <= 0 || decay_interval <= 0 ||
      crop_frames <= 0 || ref_frames <= 0 || finetune_epochs < 0) {
    throw InvalidArgument("phase " + std::to_string(phase) +
                          ": counts and sizes must be positive");
  }
  if (!(lr > 0.0) || !(decay_rate > 0.0)) {
    throw InvalidArgument("phase " + std::to_string(phase) +
                          ": lr and decay_rate must be positive");
  }
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
}

nlohmann::json PhaseConfig::ToJson() const {
  return {{"phase", phase},
          {"epochs", epochs},
          {"finetune_epochs", finetune_epochs},
          {"steps", steps},
          {"batch_size", batch_size},
          {"lr", lr},
          {"decay_interval", decay_interval},
          {"decay_rate", decay_rate},
          {"gamma", gamma},
          {"crop_frames", crop_frames},
          {"ref_frames", ref_frames},
          {"train_content", train_content},
          {"adaptable", adaptable}};
}

PhaseConfig PhaseConfig::Defaults(int phase) {
  PhaseConfig c;
  c.phase = phase;
  if (phase == 1) {
    c.epochs = 120;
    c.finetune_epochs = 20;
  } else if (phase == 3) {
    c.steps = 2000;
    c.decay_interval = 200;
    c.decay_rate = 0.5;
    c.batch_size = 1;
  }
  return c;
}

PhaseConfig PhaseConfig::FromJson(const nlohmann::json& j, int phase) {
  PhaseConfig c = Defaults(phase);
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.finetune_epochs = j.value("finetune_epochs", c.finetune_epochs);
    c.steps = j.value("steps", c.steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.decay_interval = j.value("decay_interval", c.decay_interval);
    c.decay_rate = j.value("decay_rate", c.decay_rate);
    c.gamma = j.value("gamma", c.gamma);
    c.crop_frames = j.value("crop_frames", c.crop_frames);
    c.ref_frames = j.value("ref_frames", c.ref_frames);
    c.train_content = j.value("train_content", c.train_content);
    c.adaptable = j.value("adaptable", c.adaptable);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("bad phase " + std::to_string(phase) +
                          " config: " + e.what());
  }
  c.Validate();
  return c;
}

double LrSchedule(const PhaseConfig& phase, int t) {
  if (t < 0) throw InvalidArgument("schedule position must be >= 0");
  return phase.lr * std::pow(phase.decay_rate, t / phase.decay_interval);
}

double LossRecons(const Matrix& mel_pre, const Matrix& mel_post,
                  const Matrix& target) {
  if (mel_pre.rows() != target.rows() || mel_pre.cols() != target.cols() ||
      mel_post.rows() != target.rows() || mel_post.cols() != target.cols()) {
    throw InvalidArgument("loss_recons: prediction and target shapes differ");
  }
  if (target.size() == 0) throw InvalidArgument("loss_recons: empty input");
  return (mel_pre - target).cwiseAbs().mean() +
         (mel_post - target).cwiseAbs().mean();
}

double LossCe(const RowVector& logits, int label) {
  if (label < 0 || label >= logits.size()) {
    throw InvalidArgument("loss_ce: label " + std::to_string(label) +
                          " out of range for " + std::to_string(logits.size()) +
                          " classes");
  }
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum()) - logits(label);
}

std::vector<std::string> ParameterSnapshot::Names() const {
  std::vector<std::string> out;
  for (const auto& [name, t] : tensors_) out.push_back(name);
  return out;
}

std::string ParameterSnapshot::Checksum() const {
  std::string all;
  for (const auto& [name, v] : tensors_) {
    all += name;
    all.push_back('\0');
    all.append(reinterpret_cast<const char*>(v.data()),
               v.size() * sizeof(double));
  }
  return Sha256Hex(all);
}

ParameterSnapshot SnapshotParams(const nn::ParameterSet& params,
                                 const std::vector<std::string>& prefixes) {
  ParameterSnapshot s;
  s.prefixes_ = prefixes;
  for (const auto& name : params.Matching(prefixes)) {
    s.tensors_[name] = params.Get(name)->value;
  }
  if (s.tensors_.empty()) {
    std::string joined;
    for (const auto& p : prefixes) joined += (joined.empty() ? "" : ", ") + p;
    throw InvalidArgument("snapshot filter matches no parameters: " + joined);
  }
  return s;
}

double LossWreg(const nn::ParameterSet& params,
                const ParameterSnapshot& snapshot) {
  const auto current = params.Matching(snapshot.prefixes());
  if (current != snapshot.Names()) {
    throw InvalidArgument("loss_wreg: parameter names differ from snapshot");
  }
  double total = 0.0;
  for (const auto& [name, ref] : snapshot.tensors()) {
    const Matrix& v = params.Get(name)->value;
    if (v.rows() != ref.rows() || v.cols() != ref.cols()) {
      throw InvalidArgument("loss_wreg: shape mismatch for " + name);
    }
    total += (v - ref).squaredNorm();
  }
  return total;
}

void AddWregGrad(nn::ParameterSet* params, const ParameterSnapshot& snapshot,
                 double gamma) {
  for (const auto& [name, ref] : snapshot.tensors()) {
    nn::Parameter* p = params->Get(name);
    if (p->grad.size() != p->value.size()) p->ZeroGrad();
    p->grad += 2.0 * gamma * (p->value - ref);
  }
}

StepLog::StepLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  out_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
  if (!*out_) throw InvalidArgument("cannot write log " + path.string());
}

void StepLog::Write(const nlohmann::json& line) {
  ++lines_;
  if (out_) *out_ << line.dump() << '\n' << std::flush;
}

TrainResult Phase1Train(VcModel* model, const Dataset& data,
                        int normalization_speaker, const PhaseConfig& config,
                        uint64_t seed, StepLog* log) {
  config.Validate();
  if (data.utterances.empty()) throw InvalidArgument("phase 1: empty dataset");
  const std::vector<int> speakers = data.TrainSpeakers();
  if (std::find(speakers.begin(), speakers.end(), normalization_speaker) ==
      speakers.end()) {
    throw InvalidArgument("phase 1: normalisation speaker " +
                          std::to_string(normalization_speaker) +
                          " has no training utterances");
  }
  // (source, target) pairs: every training utterance against the
  // normalisation speaker's rendition of the same item.
  std::vector<const UtteranceData*> sources;
  std::vector<const UtteranceData*> targets;
  std::vector<const UtteranceData*> self;
  for (const auto& u : data.utterances) {
    if (u.split != "train") continue;
    CheckAligned(u);
    const UtteranceData* t = data.Find(normalization_speaker, u.item);
    if (t == nullptr || t->num_frames() != u.num_frames()) {
      throw InvalidArgument("phase 1: no parallel rendition of item " +
                            std::to_string(u.item) + " by speaker " +
                            std::to_string(normalization_speaker) + " for " +
                            u.utt_id);
    }
    sources.push_back(&u);
    targets.push_back(t);
    if (u.speaker_index == normalization_speaker) self.push_back(&u);
  }
  if (model->config().content_dim != sources[0]->bn.cols()) {
    throw InvalidArgument("phase 1: content features have dim " +
                          std::to_string(sources[0]->bn.cols()) +
                          ", model expects " +
                          std::to_string(model->config().content_dim));
  }

  nn::ParameterSet& params = model->params();
  params.SetTrainableOnly({kContentPrefix});
  nn::Adam adam;
  std::mt19937_64 rng(Mix(seed, 1));
  TrainResult result;
  const int crop = std::min(config.crop_frames, MinFrames(sources));

  auto run_epoch = [&](const std::vector<const UtteranceData*>& src,
                       const std::vector<const UtteranceData*>& tgt, int epoch,
                       const char* stage) {
    std::vector<int> lengths;
    for (const auto* u : src) lengths.push_back(u->num_frames());
    const std::vector<Chunk> chunks = EpochChunks(lengths, crop, rng);
    const double lr = LrSchedule(config, epoch);
    double sum = 0.0;
    int n = 0;
    for (size_t b0 = 0; b0 < chunks.size(); b0 += config.batch_size) {
      const size_t b1 = std::min(chunks.size(), b0 + config.batch_size);
      std::vector<const Matrix*> bn;
      std::vector<const Matrix*> mel;
      std::vector<int> starts;
      for (size_t i = b0; i < b1; ++i) {
        bn.push_back(&src[chunks[i].item]->bn);
        mel.push_back(&tgt[chunks[i].item]->mel);
        starts.push_back(chunks[i].start);
      }
      const int batch = static_cast<int>(bn.size());
      const Matrix target = GatherTimeMajor(mel, starts, crop);
      Graph g(true, Mix(seed, 0x100000 + result.steps));
      ContentGraphOutput out = model->ContentGraph(
          &g, g.Constant(GatherTimeMajor(bn, starts, crop)), target, batch);
      Var loss =
          g.Add(g.L1Loss(out.mel_pre, target), g.L1Loss(out.mel_post, target));
      params.ZeroGrad();
      g.Backward(loss);
      adam.Step(&params, lr);
      const double l = g.value(loss)(0, 0);
      result.losses.push_back(l);
      sum += l;
      ++n;
      if (log != nullptr) {
        log->Write({{"phase", 1},
                    {"stage", stage},
                    {"step", result.steps},
                    {"epoch", epoch},
                    {"lr", lr},
                    {"loss", l},
                    {"recons", l}});
      }
      ++result.steps;
    }
    result.epoch_losses.push_back(sum / std::max(1, n));
  };

  for (int e = 0; e < config.epochs; ++e)
    run_epoch(sources, targets, e, "any_to_one");
  for (int e = 0; e < config.finetune_epochs; ++e) {
    run_epoch(self, self, config.epochs + e, "finetune");
  }
  params.SetAllTrainable(true);
  result.final_loss = result.epoch_losses.back();
  return result;
}

Phase2Result Phase2Train(VcModel* model, const Dataset& data,
                         const PhaseConfig& config, uint64_t seed,
                         StepLog* log) {
  config.Validate();
  const ModelConfig& mc = model->config();
  std::vector<const UtteranceData*> train;
  std::map<int, std::vector<int>> by_speaker;  // speaker -> indices in train
  for (const auto& u : data.utterances) {
    if (u.split != "train") continue;
    CheckAligned(u);
    by_speaker[u.speaker_index].push_back(static_cast<int>(train.size()));
    train.push_back(&u);
  }
  if (train.empty()) throw InvalidArgument("phase 2: no training utterances");
  for (const auto& [spk, idx] : by_speaker) {
    if (idx.size() < 2) {
      throw InvalidArgument("phase 2: speaker " + std::to_string(spk) +
                            " has a single utterance, so no distinct "
                            "reference is available");
    }
  }
  Phase2Result result;
  std::map<int, int> class_of;
  for (const auto& [spk, idx] : by_speaker) {
    class_of[spk] = static_cast<int>(result.speaker_classes.size());
    result.speaker_classes.push_back(spk);
  }
  if (static_cast<int>(result.speaker_classes.size()) != mc.num_speakers) {
    throw InvalidArgument("phase 2: data has " +
                          std::to_string(result.speaker_classes.size()) +
                          " training speakers but the classifier has " +
                          std::to_string(mc.num_speakers) + " outputs");
  }
  if (train[0]->bn.cols() != mc.content_dim) {
    throw InvalidArgument("phase 2: content feature dim mismatch");
  }

  // Normalised inputs and targets, computed once.
  std::vector<Matrix> mel_norm, prosody_norm, content;
  for (const auto* u : train) {
    mel_norm.push_back(model->NormalizeMel(u->mel));
    prosody_norm.push_back(model->NormalizeProsody(u->prosody));
    if (!config.train_content) content.push_back(model->ContentEncode(u->bn));
  }

  nn::ParameterSet& params = model->params();
  if (config.train_content) {
    params.SetAllTrainable(true);
  } else {
    params.SetTrainableOnly(
        {kSpeakerPrefix, kProsodyPrefix, kConversionPrefix});
  }
  nn::Adam adam;
  std::mt19937_64 rng(Mix(seed, 2));
  const int crop = std::min(config.crop_frames, MinFrames(train));
  const int ref_len = std::min(config.ref_frames, MinFrames(train));
  std::vector<int> lengths;
  for (const auto* u : train) lengths.push_back(u->num_frames());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<Chunk> chunks = EpochChunks(lengths, crop, rng);
    const double lr = LrSchedule(config, epoch);
    double sum = 0.0;
    int n = 0;
    for (size_t b0 = 0; b0 < chunks.size(); b0 += config.batch_size) {
      const size_t b1 = std::min(chunks.size(), b0 + config.batch_size);
      std::vector<const Matrix*> bn, mel, mel_n, pros, cont, ref;
      std::vector<int> starts, ref_starts, labels;
      std::vector<PairRecord> pairs;
      for (size_t i = b0; i < b1; ++i) {
        const int item = chunks[i].item;
        const UtteranceData* u = train[item];
        bn.push_back(&u->bn);
        mel.push_back(&u->mel);
        pros.push_back(&prosody_norm[item]);
        if (!config.train_content) cont.push_back(&content[item]);
        starts.push_back(chunks[i].start);
        // Reference: another utterance of the same speaker.
        const std::vector<int>& same = by_speaker[u->speaker_index];
        int r = item;
        while (r == item)
          r = same[UniformInt(rng, static_cast<int>(same.size()))];
        ref.push_back(&mel_norm[r]);
        ref_starts.push_back(
            UniformInt(rng, train[r]->num_frames() - ref_len + 1));
        labels.push_back(class_of[u->speaker_index]);
        pairs.push_back({u->utt_id, train[r]->utt_id});
      }
      const int batch = static_cast<int>(bn.size());
      const Matrix target = GatherTimeMajor(mel, starts, crop);

      Graph g(true, Mix(seed, 0x200000 + result.steps));
      Var bn_v = g.Constant(GatherTimeMajor(bn, starts, crop));
      Var content_v = config.train_content
                          ? model->ContentEncodeGraph(&g, bn_v, batch)
                          : g.Constant(GatherTimeMajor(cont, starts, crop));
      SpeakerGraphOutput spk = model->SpeakerGraph(
          &g, g.Constant(GatherTimeMajor(ref, ref_starts, ref_len)), batch);
      Var explicit_v, implicit_v;
      if (mc.use_prosody) {
        explicit_v = g.Constant(GatherTimeMajor(pros, starts, crop));
        implicit_v = model->ProsodyGraph(&g, bn_v, batch);
      }
      MelGraphOutput out = model->ConversionGraph(
          &g, content_v, explicit_v, spk.embedding, implicit_v, batch);
      Var recons = ReconsGraph(&g, out, target);
      Var ce = g.CrossEntropy(spk.logits, labels);
      Var loss = g.Add(recons, ce);
      params.ZeroGrad();
      g.Backward(loss);
      adam.Step(&params, lr);

      const double l = g.value(loss)(0, 0);
      result.losses.push_back(l);
      result.recons.push_back(g.value(recons)(0, 0));
      result.ce.push_back(g.value(ce)(0, 0));
      if (log != nullptr) {
        nlohmann::json jp = nlohmann::json::array();
        for (const auto& p : pairs) jp.push_back({p.target, p.reference});
        log->Write({{"phase", 2},
                    {"step", result.steps},
                    {"epoch", epoch},
                    {"lr", lr},
                    {"loss", l},
                    {"recons", result.recons.back()},
                    {"ce", result.ce.back()},
                    {"pairs", jp}});
      }
      result.pairs.push_back(std::move(pairs));
      sum += l;
      ++n;
      ++result.steps;
    }
    result.epoch_losses.push_back(sum / std::max(1, n));
  }
  params.SetAllTrainable(true);
  result.final_loss = result.epoch_losses.back();
  return result;
}

Phase3Result Phase3Adapt(VcModel* model,
                         const std::vector<const UtteranceData*>& utterances,
                         const PhaseConfig& config, uint64_t seed, StepLog* log,
                         const std::vector<std::string>& prefixes_in) {
  config.Validate();
  if (utterances.size() != 1) {
    throw InvalidArgument("phase 3 adapts on exactly one utterance, got " +
                          std::to_string(utterances.size()));
  }
  const UtteranceData& u = *utterances[0];
  if (u.num_frames() == 0) throw InvalidArgument("phase 3: empty utterance");
  CheckAligned(u);
  const std::vector<std::string>& prefixes = !prefixes_in.empty() ? prefixes_in
                                             : !config.adaptable.empty()
                                                 ? config.adaptable
                                                 : AdaptablePrefixes();

  nn::ParameterSet& params = model->params();
  Phase3Result result;
  const ParameterSnapshot snapshot = SnapshotParams(params, prefixes);
  result.snapshot_checksum = snapshot.Checksum();
  const std::vector<std::string> names = snapshot.Names();
  // Activations up to the highway stack are cached, so adaptable tensors
  // must all sit downstream of it.
  const std::vector<std::string> downstream = {
      "conversion.cbhg.highway.", "conversion.cbhg.bigru.", "conversion.out.",
      "conversion.postnet."};
  for (const auto& n : names) {
    if (!nn::MatchesAnyPrefix(n, downstream)) {
      throw InvalidArgument("phase 3 cannot adapt " + n +
                            ": only layers from the highway stack onwards");
    }
  }

  // Everything upstream of the highway stack is frozen: compute it once.
  params.SetAllTrainable(false);
  Matrix highway_in;
  {
    const ContentRepr content = model->ContentEncode(u.bn);
    const SpeakerEmbedding spk = model->SpeakerForward(u.mel);
    Graph g(false);
    Var explicit_v, implicit_v;
    if (model->config().use_prosody) {
      dsp::ProsodyFeatures pf = dsp::ProsodyFeatures::FromMatrix(u.prosody);
      const ProsodyRepr pr = model->ProsodyForward(u.bn, pf);
      explicit_v = g.Constant(model->NormalizeProsody(u.prosody));
      implicit_v = g.Constant(pr.implicit);
    }
    highway_in = g.value(
        model->ConversionToHighway(&g, g.Constant(content), explicit_v,
                                   g.Constant(spk.embedding), implicit_v, 1));
  }
  params.SetTrainableOnly(prefixes);

  nn::Adam adam;
  for (int step = 0; step < config.steps; ++step) {
    const double lr = LrSchedule(config, step);
    Graph g(true, Mix(seed, 0x300000 + step));
    MelGraphOutput out =
        model->ConversionFromHighway(&g, g.Constant(highway_in), 1);
    Var recons = ReconsGraph(&g, out, u.mel);
    const double wreg = LossWreg(params, snapshot);
    params.ZeroGrad();
    g.Backward(recons);
    AddWregGrad(&params, snapshot, config.gamma);
    adam.Step(&params, lr);
    const double r = g.value(recons)(0, 0);
    const double l = r + config.gamma * wreg;
    result.losses.push_back(l);
    result.recons.push_back(r);
    result.wreg.push_back(wreg);
    if (log != nullptr) {
      log->Write({{"phase", 3},
                  {"step", step},
                  {"lr", lr},
                  {"loss", l},
                  {"recons", r},
                  {"wreg", wreg},
                  {"gamma", config.gamma},
                  {"checksum", ChecksumOf(params, names)}});
    }
    ++result.steps;
  }
  params.SetAllTrainable(true);
  result.final_loss = result.losses.back();
  result.final_drift = std::sqrt(LossWreg(params, snapshot));
  return result;
}

}  // namespace osvc
