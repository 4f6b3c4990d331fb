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

// Command-line front end: corpus, features, train, convert, eval.
// Exit codes: 0 success, 2 usage or configuration error, 3 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "osvc/content.h"
#include "osvc/convert.h"
#include "osvc/corpus.h"
#include "osvc/dsp.h"
#include "osvc/errors.h"
#include "osvc/evaluation.h"
#include "osvc/file_util.h"
#include "osvc/pipeline.h"
#include "osvc/random.h"
#include "osvc/tensor_file.h"
#include "osvc/training.h"
#include "osvc/wav_io.h"
#include "run_record.h"

namespace fs = std::filesystem;

namespace osvc {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr char kConfigEnv[] = "OSVC_CONFIG";

struct Options {
  std::string config;
  std::optional<uint64_t> seed;

  int phase = 0;
  std::vector<std::string> utterances;
  std::string utterance_content;
  std::string init;
  std::string out_dir;

  std::string source;
  std::string source_content;
  std::string target_ref;
  std::string checkpoint;
  std::string out;

  std::vector<std::string> systems;
  std::vector<std::string> sources;
  std::vector<std::string> converted;
  std::string mcd_a;
  std::string mcd_b;
};

RunConfig LoadConfig(const Options& opt) {
  std::string path = opt.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  RunConfig cfg = path.empty() ? DeskRunConfig() : RunConfig::Load(path);
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.Validate();
  return cfg;
}

fs::path RecordPath(const RunConfig& cfg, const std::string& name) {
  return cfg.report_dir / "runs" / (name + ".json");
}

void WriteReport(const fs::path& stem, const nlohmann::json& json,
                 const std::string& table, RunRecord* record) {
  const fs::path json_path = fs::path(stem.string() + ".json");
  const fs::path txt_path = fs::path(stem.string() + ".txt");
  WriteFileAtomic(json_path, json.dump(2) + "\n");
  WriteFileAtomic(txt_path, table);
  record->AddOutput(json_path);
  record->AddOutput(txt_path);
}

corpus::Manifest LoadManifest(const RunConfig& cfg) {
  if (!fs::exists(cfg.ManifestPath())) {
    throw InvalidArgument("no manifest at " + cfg.ManifestPath().string() +
                          "; run 'osvc corpus' first");
  }
  return corpus::Manifest::Load(cfg.ManifestPath());
}

bool HasCheckpoint(const fs::path& dir) {
  return fs::exists(dir / "model.json");
}

fs::path RequireCheckpoint(const fs::path& dir, const std::string& what) {
  if (!HasCheckpoint(dir)) {
    throw InvalidArgument(what + " checkpoint not found at " + dir.string());
  }
  return dir;
}

std::optional<ToyEncoder> LoadEncoderIfNeeded(const RunConfig& cfg) {
  if (cfg.content.kind != "toy_encoder") return std::nullopt;
  const fs::path dir = cfg.EncoderDir();
  if (!fs::exists(dir / "encoder.json")) {
    throw InvalidArgument("no toy encoder at " + dir.string() +
                          "; run 'osvc features' first");
  }
  return ToyEncoder::Load(dir);
}

// Content features for a clip outside the corpus.
ContentFeatures ContentFor(const RunConfig& cfg, const MelSpectrogram& mel,
                           const std::string& content_path) {
  if (!content_path.empty()) {
    return LoadContentFeatures(content_path, cfg.content.dim,
                               static_cast<int>(mel.rows()));
  }
  if (cfg.content.kind == "file") {
    throw InvalidArgument(
        "content provider 'file' needs a content tensor for this clip");
  }
  const std::optional<ToyEncoder> enc = LoadEncoderIfNeeded(cfg);
  return InferContent(mel, *enc, cfg.content.dim);
}

nlohmann::json Provenance(const RunConfig& cfg, int phase, int64_t steps) {
  return {{"phase", phase},
          {"steps", steps},
          {"seed", cfg.seed},
          {"config_hash", cfg.Hash()}};
}

int CmdCorpus(const Options& opt) {
  const RunConfig cfg = LoadConfig(opt);
  std::error_code ec;
  fs::create_directories(cfg.corpus_dir, ec);
  const fs::path probe = cfg.corpus_dir / ".osvc_write_probe";
  if (ec || !std::ofstream(probe)) {
    throw InvalidArgument("cannot write to corpus directory " +
                          cfg.corpus_dir.string());
  }
  fs::remove(probe, ec);
  RunRecord record("corpus", cfg.Hash());
  const corpus::Manifest m = corpus::BuildCorpus(cfg.corpus, cfg.corpus_dir);
  record.AddOutput(cfg.ManifestPath());
  record.Set("manifest_sha256", Sha256Hex(m.Serialize()));
  record.Set("utterances", m.records.size());
  record.Write(RecordPath(cfg, "corpus"));
  std::cout << "manifest " << cfg.ManifestPath().string() << "\n"
            << "utterances " << m.records.size() << " speakers "
            << cfg.corpus.n_speakers << " train_speakers "
            << m.NumTrainSpeakers() << "\n";
  return kExitOk;
}

int CmdFeatures(const Options& opt) {
  const RunConfig cfg = LoadConfig(opt);
  const corpus::Manifest manifest = LoadManifest(cfg);
  RunRecord record("features", cfg.Hash());
  record.AddInput(cfg.ManifestPath());

  std::optional<ToyEncoder> encoder;
  if (cfg.content.kind == "toy_encoder") {
    const fs::path dir = cfg.EncoderDir();
    if (fs::exists(dir / "encoder.json")) {
      encoder = ToyEncoder::Load(dir);
      if (encoder->config().dim != cfg.content.dim) {
        throw InvalidArgument("encoder at " + dir.string() + " has width " +
                              std::to_string(encoder->config().dim));
      }
    } else {
      std::vector<LabeledMel> train, heldout;
      std::vector<std::string> unreadable;
      LoadLabeledMels(manifest, &train, &heldout, &unreadable);
      encoder.emplace(cfg.toy_encoder);
      const ToyTrainReport rep = TrainToyEncoder(train, heldout, &*encoder);
      encoder->Save(dir, {{"seed", cfg.toy_encoder.seed},
                          {"heldout_accuracy", rep.heldout_accuracy},
                          {"final_loss", rep.final_loss}});
      record.Set("encoder_heldout_accuracy", rep.heldout_accuracy);
      std::cout << "trained toy encoder: held-out frame accuracy "
                << rep.heldout_accuracy << "\n";
    }
    record.AddInput(dir);
  }

  const FeatureReport rep = ExtractFeatures(
      manifest, cfg.features_dir, cfg.content, encoder ? &*encoder : nullptr);
  record.Set("written", rep.written.size());
  record.Set("skipped", rep.skipped.size());
  record.Set("failed", rep.failed);
  record.AddOutput(cfg.features_dir / "index.json");
  record.Write(RecordPath(cfg, "features"));
  std::cout << "written " << rep.written.size() << " skipped "
            << rep.skipped.size() << " failed " << rep.failed.size()
            << " completed " << rep.completed() << "\n";
  if (!rep.failed.empty()) {
    for (const std::string& f : rep.failed)
      std::cerr << "failed: " << f << "\n";
    return kExitData;
  }
  return kExitOk;
}

int TrainPhase1(const RunConfig& cfg, const Options& opt, RunRecord* record) {
  const corpus::Manifest manifest = LoadManifest(cfg);
  const Dataset data = LoadDataset(manifest, cfg.features_dir, cfg.content.dim);
  ModelConfig mc = cfg.model;
  mc.num_speakers = static_cast<int>(data.TrainSpeakers().size());
  mc.content_dim = cfg.content.dim;
  mc.Finalize();
  VcModel model(mc, Mix(cfg.seed, kStageModelInit));
  const fs::path out =
      opt.out_dir.empty() ? cfg.PhaseDir(1) : fs::path(opt.out_dir);
  fs::create_directories(out);
  StepLog log(out / "train_log.jsonl");
  const TrainResult r =
      Phase1Train(&model, data, cfg.corpus.normalization_speaker, cfg.phase1,
                  Mix(cfg.seed, kStagePhase1), &log);
  model.Save(out, Provenance(cfg, 1, r.steps));
  record->AddInput(cfg.features_dir / "index.json");
  record->AddOutput(out);
  record->Set("final_loss", r.final_loss);
  std::cout << "phase 1: " << r.steps << " steps, final loss " << r.final_loss
            << ", checkpoint " << out.string() << "\n";
  return kExitOk;
}

int TrainPhase2(const RunConfig& cfg, const Options& opt, RunRecord* record) {
  const fs::path init = RequireCheckpoint(
      opt.init.empty() ? cfg.PhaseDir(1) : fs::path(opt.init), "phase-1");
  nlohmann::json prov;
  VcModel model = VcModel::Load(init, &prov);
  if (prov.value("phase", 0) != 1) {
    throw InvalidArgument("checkpoint " + init.string() +
                          " is not a phase-1 checkpoint");
  }
  const corpus::Manifest manifest = LoadManifest(cfg);
  const Dataset data = LoadDataset(manifest, cfg.features_dir, cfg.content.dim);
  const fs::path out =
      opt.out_dir.empty() ? cfg.PhaseDir(2) : fs::path(opt.out_dir);
  fs::create_directories(out);
  StepLog log(out / "train_log.jsonl");
  const Phase2Result r =
      Phase2Train(&model, data, cfg.phase2, Mix(cfg.seed, kStagePhase2), &log);
  nlohmann::json p = Provenance(cfg, 2, r.steps);
  std::vector<std::string> speakers;
  for (int s : r.speaker_classes) {
    for (const corpus::ManifestRecord& rec : manifest.records) {
      if (rec.speaker_index == s) {
        speakers.push_back(rec.speaker);
        break;
      }
    }
  }
  p["speakers"] = speakers;
  model.Save(out, p);
  record->AddInput(init);
  record->AddOutput(out);
  record->Set("final_recons", r.recons.empty() ? 0.0 : r.recons.back());
  std::cout << "phase 2: " << r.steps << " steps, final loss " << r.final_loss
            << ", checkpoint " << out.string() << "\n";
  return kExitOk;
}

int TrainPhase3(const RunConfig& cfg, const Options& opt, RunRecord* record) {
  if (opt.utterances.size() != 1) {
    throw InvalidArgument(
        "phase 3 adapts on exactly one target utterance; got " +
        std::to_string(opt.utterances.size()) + " --utterance flags");
  }
  const fs::path init = RequireCheckpoint(
      opt.init.empty() ? cfg.PhaseDir(2) : fs::path(opt.init), "phase-2");
  nlohmann::json prov;
  VcModel model = VcModel::Load(init, &prov);
  if (prov.value("phase", 0) != 2) {
    throw InvalidArgument("checkpoint " + init.string() +
                          " is not a phase-2 checkpoint");
  }
  const fs::path wav = opt.utterances.front();
  const AudioClip audio = ReadWav(wav);
  UtteranceData u = ExtractUtterance(audio, [&](const MelSpectrogram& mel) {
    return ContentFor(cfg, mel, opt.utterance_content);
  });
  u.utt_id = wav.stem().string();
  const fs::path out =
      opt.out_dir.empty() ? cfg.PhaseDir(3) : fs::path(opt.out_dir);
  fs::create_directories(out);
  StepLog log(out / "train_log.jsonl");
  const Phase3Result r =
      Phase3Adapt(&model, {&u}, cfg.phase3, Mix(cfg.seed, kStagePhase3), &log);
  const dsp::ProsodyFeatures pf = dsp::ProsodyFeatures::FromMatrix(u.prosody);
  const dsp::F0Stats stats = dsp::ComputeF0Stats(pf.lf0, pf.vuv);
  nlohmann::json p = Provenance(cfg, 3, r.steps);
  p["utterance"] = wav.string();
  p["utterance_sha256"] = Sha256Hex(ReadFileBytes(wav));
  p["utterance_seconds"] = audio.duration();
  p["target_f0_stats"] = {{"mean_lf0", stats.mean_lf0},
                          {"std_lf0", stats.std_lf0}};
  p["base_checkpoint"] = init.string();
  model.Save(out, p);
  record->AddInput(init);
  record->AddInput(wav);
  record->AddOutput(out);
  record->Set("final_drift", r.final_drift);
  std::cout << "phase 3: " << r.steps << " steps on " << audio.duration()
            << " s, drift " << r.final_drift << ", checkpoint " << out.string()
            << "\n";
  return kExitOk;
}

int CmdTrain(const Options& opt) {
  const RunConfig cfg = LoadConfig(opt);
  if (opt.phase != 3 && !opt.utterances.empty()) {
    throw InvalidArgument("--utterance is only valid for phase 3");
  }
  RunRecord record("train --phase " + std::to_string(opt.phase), cfg.Hash());
  int rc = kExitOk;
  switch (opt.phase) {
    case 1:
      rc = TrainPhase1(cfg, opt, &record);
      break;
    case 2:
      rc = TrainPhase2(cfg, opt, &record);
      break;
    case 3:
      rc = TrainPhase3(cfg, opt, &record);
      break;
    default:
      throw InvalidArgument("--phase must be 1, 2 or 3");
  }
  record.Write(RecordPath(cfg, "train_phase" + std::to_string(opt.phase)));
  return rc;
}

int CmdConvert(const Options& opt) {
  const RunConfig cfg = LoadConfig(opt);
  const fs::path ckpt = RequireCheckpoint(
      opt.checkpoint.empty() ? cfg.PhaseDir(3) : fs::path(opt.checkpoint),
      "conversion");
  nlohmann::json prov;
  const VcModel model = VcModel::Load(ckpt, &prov);
  RunRecord record("convert", cfg.Hash());
  if (prov.value("phase", 0) != 3) {
    const std::string w =
        "checkpoint " + ckpt.string() +
        " is not adapted; a target speaker unseen in phase 2 will not be "
        "reproduced faithfully";
    std::cerr << "warning: " << w << "\n";
    record.AddWarning(w);
  }
  const AudioClip source = ReadWav(opt.source);
  const AudioClip target = ReadWav(opt.target_ref);
  const MelSpectrogram source_mel = dsp::ComputeMel(source);
  const ContentFeatures bn = ContentFor(cfg, source_mel, opt.source_content);
  const MelSpectrogram target_mel = dsp::ComputeMel(target);
  const dsp::ProsodyFeatures tp = dsp::ExtractProsody(target);
  const dsp::F0Stats stats = dsp::ComputeF0Stats(tp.lf0, tp.vuv);

  const ConvertResult res = Convert(source, bn, target_mel, stats, model);
  const fs::path out = opt.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const fs::path mel_path = fs::path(out).replace_extension(".mel.tensor");
  const fs::path png_path = fs::path(out).replace_extension(".png");
  WriteWav(out, res.audio);
  WriteTensorFile(mel_path, MatrixRecord("mel", res.mel_post));
  EmitSpectrogramImage(res.mel_post, png_path);

  record.AddInput(opt.source);
  record.AddInput(opt.target_ref);
  record.AddInput(ckpt);
  record.AddOutput(out);
  record.AddOutput(mel_path);
  record.AddOutput(png_path);
  record.Write(RecordPath(cfg, "convert"));
  std::cout << "wrote " << out.string() << " (" << res.audio.duration()
            << " s), " << mel_path.string() << ", " << png_path.string()
            << "\n";
  return kExitOk;
}

// Loads the adaptation target of a phase-3 checkpoint, or adapts nothing and
// uses the plan's adaptation item when the checkpoint is not adapted.
struct TargetInfo {
  MelSpectrogram reference;
  dsp::F0Stats stats;
};

TargetInfo TargetFor(const corpus::Manifest& manifest, const Dataset& data,
                     const EvalPlan& plan) {
  const int target = plan.ResolveTarget(manifest);
  const UtteranceData* u = data.Find(target, plan.adapt_item);
  if (u == nullptr) throw InvalidArgument("target adaptation item missing");
  const dsp::ProsodyFeatures pf = dsp::ProsodyFeatures::FromMatrix(u->prosody);
  return {u->mel, dsp::ComputeF0Stats(pf.lf0, pf.vuv)};
}

int EvalProsodyFromFiles(const RunConfig& cfg, const Options& opt) {
  if (opt.sources.size() != opt.converted.size()) {
    throw InvalidArgument(
        "pair lists differ in length: " + std::to_string(opt.sources.size()) +
        " sources, " + std::to_string(opt.converted.size()) + " converted");
  }
  RunRecord record("eval prosody-corr", cfg.Hash());
  ProsodyCorrReport report;
  report.systems.push_back({"files", {}, 0.0, 0.0});
  for (size_t i = 0; i < opt.sources.size(); ++i) {
    const ProsodyCorr c =
        ProsodyCorrelation(ReadWav(opt.sources[i]), ReadWav(opt.converted[i]));
    PairMetrics m;
    m.pair_id = fs::path(opt.converted[i]).stem().string();
    m.source = opt.sources[i];
    m.target = opt.converted[i];
    m.r_energy = c.r_energy;
    m.r_lf0 = c.r_lf0;
    m.mcd = std::numeric_limits<double>::quiet_NaN();
    report.systems.front().pairs.push_back(m);
    record.AddInput(opt.sources[i]);
    record.AddInput(opt.converted[i]);
  }
  report.Aggregate();
  WriteReport(cfg.report_dir / "prosody_corr", report.ToJson(),
              report.ToTable(), &record);
  record.Write(RecordPath(cfg, "eval_prosody_corr"));
  std::cout << report.ToTable();
  return kExitOk;
}

int CmdEvalProsody(const Options& opt) {
  const RunConfig cfg = LoadConfig(opt);
  if (!opt.sources.empty() || !opt.converted.empty()) {
    return EvalProsodyFromFiles(cfg, opt);
  }
  const corpus::Manifest manifest = LoadManifest(cfg);
  const Dataset data = LoadDataset(manifest, cfg.features_dir, cfg.content.dim);
  const EvalPlan plan;
  const std::vector<EvalPair> pairs = BuildEvalPairs(manifest, data, plan);
  const TargetInfo target = TargetFor(manifest, data, plan);
  const std::string target_name =
      manifest.Find(plan.ResolveTarget(manifest), plan.adapt_item)->speaker;

  std::vector<std::pair<std::string, fs::path>> systems;
  for (const std::string& s : opt.systems) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidArgument("--system expects NAME=CHECKPOINT, got '" + s +
                            "'");
    }
    systems.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (systems.empty()) systems.emplace_back("full", cfg.PhaseDir(3));

  RunRecord record("eval prosody-corr", cfg.Hash());
  ProsodyCorrReport report;
  for (const auto& [name, dir] : systems) {
    const VcModel model =
        VcModel::Load(RequireCheckpoint(dir, "system '" + name + "'"));
    record.AddInput(dir);
    report.systems.push_back({name,
                              EvaluatePairs(model, pairs, target.reference,
                                            target.stats, target_name),
                              0.0, 0.0});
  }
  report.Aggregate();
  WriteReport(cfg.report_dir / "prosody_corr", report.ToJson(),
              report.ToTable(), &record);
  record.Write(RecordPath(cfg, "eval_prosody_corr"));
  std::cout << report.ToTable();
  return kExitOk;
}

int CmdEvalSweep(const Options& opt) {
  const RunConfig cfg = LoadConfig(opt);
  const fs::path base_dir = RequireCheckpoint(
      opt.checkpoint.empty() ? cfg.PhaseDir(2) : fs::path(opt.checkpoint),
      "phase-2");
  const VcModel base = VcModel::Load(base_dir);
  const corpus::Manifest manifest = LoadManifest(cfg);
  const Dataset data = LoadDataset(manifest, cfg.features_dir, cfg.content.dim);
  const EvalPlan plan;
  const std::vector<EvalPair> pairs = BuildEvalPairs(manifest, data, plan);
  const AudioClip target = ConcatenateTargetAudio(manifest, plan);
  const std::optional<ToyEncoder> enc = cfg.content.kind == "toy_encoder"
                                            ? LoadEncoderIfNeeded(cfg)
                                            : std::nullopt;
  if (!enc) {
    throw InvalidArgument("duration sweep needs the toy_encoder provider");
  }
  const DurationSweepReport report = DurationSweep(
      base, target, DefaultSweepDurations(), pairs,
      [&](const MelSpectrogram& mel) {
        return InferContent(mel, *enc, cfg.content.dim);
      },
      cfg.phase3, Mix(cfg.seed, kStagePhase3));
  RunRecord record("eval duration-sweep", cfg.Hash());
  record.AddInput(base_dir);
  WriteReport(cfg.report_dir / "duration_sweep", report.ToJson(),
              report.ToTable(), &record);
  record.Write(RecordPath(cfg, "eval_duration_sweep"));
  std::cout << report.ToTable();
  return kExitOk;
}

MelSpectrogram MelFromFile(const fs::path& p) {
  if (p.extension() == ".wav") return dsp::ComputeMel(ReadWav(p));
  return RecordToMatrix(ReadTensorFile(p));
}

int CmdEvalMcd(const Options& opt) {
  const double d = Mcd(MelFromFile(opt.mcd_a), MelFromFile(opt.mcd_b));
  std::cout << std::fixed << std::setprecision(4) << d << "\n";
  return kExitOk;
}

int Run(int argc, char** argv) {
  CLI::App app{"osvc: one-shot voice conversion with prosody transfer"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config,
                 std::string("Run config JSON (default: $") + kConfigEnv +
                     ", else built-in desk settings)");
  app.add_option("--seed", opt.seed, "Override the run seed");

  CLI::App* corpus = app.add_subcommand("corpus", "Synthesise the corpus");
  CLI::App* features =
      app.add_subcommand("features", "Extract mel, prosody and content");

  CLI::App* train = app.add_subcommand("train", "Run a training phase");
  train->add_option("--phase", opt.phase, "1, 2 or 3")
      ->required()
      ->check(CLI::Range(1, 3));
  train
      ->add_option("--utterance", opt.utterances,
                   "Target utterance WAV (phase 3, exactly once)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->allow_extra_args(false);
  train->add_option("--utterance-content", opt.utterance_content,
                    "Content tensor for the utterance (file provider)");
  train->add_option("--init", opt.init, "Previous-phase checkpoint");
  train->add_option("--out", opt.out_dir, "Checkpoint directory");

  CLI::App* convert = app.add_subcommand("convert", "Convert one utterance");
  convert->add_option("--source", opt.source, "Source WAV")->required();
  convert->add_option("--target-ref", opt.target_ref, "Target reference WAV")
      ->required();
  convert->add_option("--checkpoint", opt.checkpoint, "Model checkpoint");
  convert->add_option("--out", opt.out, "Output WAV")->required();
  convert->add_option("--source-content", opt.source_content,
                      "Content tensor for the source (file provider)");

  CLI::App* eval = app.add_subcommand("eval", "Objective evaluation");
  eval->require_subcommand(1);
  CLI::App* prosody =
      eval->add_subcommand("prosody-corr", "Energy and lf0 correlation");
  prosody->add_option("--system", opt.systems,
                      "NAME=CHECKPOINT, repeatable (default full=phase3)");
  prosody->add_option("--sources", opt.sources, "Source WAVs");
  prosody->add_option("--converted", opt.converted,
                      "Converted WAVs, paired with --sources");
  CLI::App* sweep =
      eval->add_subcommand("duration-sweep", "Adaptation-duration sweep");
  sweep->add_option("--checkpoint", opt.checkpoint, "Phase-2 checkpoint");
  CLI::App* mcd = eval->add_subcommand("mcd", "Mel cepstral distortion");
  mcd->add_option("a", opt.mcd_a, "WAV or mel tensor")->required();
  mcd->add_option("b", opt.mcd_b, "WAV or mel tensor")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (corpus->parsed()) return CmdCorpus(opt);
    if (features->parsed()) return CmdFeatures(opt);
    if (train->parsed()) return CmdTrain(opt);
    if (convert->parsed()) return CmdConvert(opt);
    if (prosody->parsed()) return CmdEvalProsody(opt);
    if (sweep->parsed()) return CmdEvalSweep(opt);
    if (mcd->parsed()) return CmdEvalMcd(opt);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace osvc

int main(int argc, char** argv) { return osvc::Run(argc, argv); }
