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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "osvc/dsp.h"
#include "osvc/errors.h"
#include "osvc/evaluation.h"
#include "osvc/model.h"
#include "osvc/nn/gradcheck.h"
#include "osvc/nn/graph.h"
#include "osvc/pipeline.h"
#include "osvc/random.h"
#include "osvc/training.h"
#include "osvc/wav_io.h"

namespace osvc {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* fmt, double a = 0, double b = 0, double c = 0,
                double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------- C1

Outcome WregSuite() {
  const auto t0 = Clock::now();
  VcModel model(ModelConfig::Desk(6, 64), 7);
  nn::ParameterSet& params = model.params();
  const ParameterSnapshot snap = SnapshotParams(params, AdaptablePrefixes());
  const double at_anchor = LossWreg(params, snap);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 0.01);
  std::map<std::string, Matrix> delta;
  for (const auto& [name, value] : snap.tensors()) {
    Matrix d(value.rows(), value.cols());
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = normal(rng);
    delta[name] = d;
  }
  auto shift = [&](double k) {
    for (const auto& [name, value] : snap.tensors()) {
      params.Get(name)->value = value + k * delta[name];
    }
    return LossWreg(params, snap);
  };
  const double l1 = shift(1.0);
  const double l2 = shift(2.0);
  const double quad_err = std::abs(l2 - 4.0 * l1) / (4.0 * l1);

  // Leaves theta at theta_f + 2 delta for the gradient probes.
  params.SetTrainableOnly(AdaptablePrefixes());
  auto loss = [&](bool backward) {
    if (backward) AddWregGrad(&params, snap, 1.0);
    return LossWreg(params, snap);
  };
  double worst = 0.0;
  for (const nn::GradProbe& p : nn::ProbeGradients(&params, loss, 50, 11)) {
    worst = std::max(worst, p.rel_error);
  }
  params.SetAllTrainable(true);

  Outcome o;
  o.pass = at_anchor == 0.0 && quad_err <= 1e-6 && worst <= 1e-3;
  o.detail = Fmt("wreg(theta_f)=%g quadratic rel err=%.2e grad rel err=%.2e",
                 at_anchor, quad_err, worst) +
             Fmt(" (%.1f s)", Seconds(t0));
  return o;
}

// ---------------------------------------------------------------- C4

Outcome GradientIntegrity(const Dataset& data) {
  const auto t0 = Clock::now();
  VcModel model(ModelConfig::Tiny(2, 6), 5);
  const int crop = 12, ref_len = 16;
  // Two speakers, one utterance each, with a second utterance as reference.
  std::vector<const UtteranceData*> tgt = {data.Find(0, 1), data.Find(1, 2)};
  std::vector<const UtteranceData*> ref = {data.Find(0, 3), data.Find(1, 4)};
  const std::vector<int> labels = {0, 1};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  std::vector<Matrix> bn, mel, mel_n, pros, ref_n;
  for (int b = 0; b < 2; ++b) {
    Matrix r(crop, 6);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = normal(rng);
    bn.push_back(r);
    mel.push_back(tgt[b]->mel.middleRows(40, crop));
    pros.push_back(
        model.NormalizeProsody(tgt[b]->prosody).middleRows(40, crop));
    ref_n.push_back(model.NormalizeMel(ref[b]->mel).middleRows(20, ref_len));
  }
  auto time_major = [](const std::vector<Matrix>& items) {
    const Eigen::Index t = items[0].rows(), c = items[0].cols();
    Matrix out(t * items.size(), c);
    for (Eigen::Index s = 0; s < t; ++s) {
      for (size_t b = 0; b < items.size(); ++b) {
        out.row(s * items.size() + b) = items[b].row(s);
      }
    }
    return out;
  };
  const Matrix bn_tm = time_major(bn), target = time_major(mel),
               pros_tm = time_major(pros), ref_tm = time_major(ref_n);
  auto loss = [&](bool backward) {
    nn::Graph g(true, 42);
    nn::Var bn_v = g.Constant(bn_tm);
    nn::Var content = model.ContentEncodeGraph(&g, bn_v, 2);
    SpeakerGraphOutput spk = model.SpeakerGraph(&g, g.Constant(ref_tm), 2);
    nn::Var implicit = model.ProsodyGraph(&g, bn_v, 2);
    MelGraphOutput out = model.ConversionGraph(&g, content, g.Constant(pros_tm),
                                               spk.embedding, implicit, 2);
    nn::Var recons =
        g.Add(g.L1Loss(out.mel_pre, target), g.L1Loss(out.mel_post, target));
    nn::Var total = g.Add(recons, g.CrossEntropy(spk.logits, labels));
    if (backward) g.Backward(total);
    return g.value(total)(0, 0);
  };
  double worst = 0.0;
  std::string worst_name;
  const auto probes = nn::ProbeGradients(&model.params(), loss, 20, 23, 1e-6);
  for (const nn::GradProbe& p : probes) {
    if (p.rel_error > worst) {
      worst = p.rel_error;
      worst_name = p.name;
    }
  }
  Outcome o;
  o.pass = probes.size() == 20 && worst <= 1e-3;
  o.detail = Fmt("20 probes, max rel err %.2e", worst) + " at " + worst_name +
             Fmt(" (%.1f s)", Seconds(t0));
  return o;
}

// ---------------------------------------------------------------- C8

Outcome DspSuite() {
  const auto t0 = Clock::now();
  std::vector<std::string> failures;
  double worst_tone = 0.0;
  for (double hz = 80.0; hz <= 400.0; hz += 20.0) {
    AudioClip clip;
    clip.samples.resize(16000);
    for (size_t i = 0; i < clip.samples.size(); ++i) {
      clip.samples[i] = 0.5 * std::sin(2.0 * M_PI * hz * i / 16000.0);
    }
    const dsp::ProsodyFeatures p = dsp::ExtractProsody(clip);
    std::vector<double> err;
    for (size_t t = 0; t < p.lf0.size(); ++t) {
      if (p.vuv[t] > 0) err.push_back(std::abs(std::exp(p.lf0[t]) - hz));
    }
    double median = 1e9;
    if (!err.empty()) {
      std::nth_element(err.begin(), err.begin() + err.size() / 2, err.end());
      median = err[err.size() / 2];
    }
    worst_tone = std::max(worst_tone, median);
  }
  if (worst_tone > 3.0) failures.push_back("tone");

  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> x(200);
  for (double& v : x) v = normal(rng);
  const double self_r = Pearson(x, x);
  if (std::abs(self_r - 1.0) > 1e-12) failures.push_back("pearson");

  std::vector<double> lf0, vuv;
  for (int t = 0; t < 100; ++t) {
    const bool voiced = t % 5 != 0;
    vuv.push_back(voiced ? 1.0 : 0.0);
    lf0.push_back(voiced ? std::log(120.0 + t) : 0.0);
  }
  const dsp::F0Stats stats = dsp::ComputeF0Stats(lf0, vuv);
  const std::vector<double> same = dsp::TransformLf0(lf0, vuv, stats, stats);
  double identity_err = 0.0;
  for (size_t t = 0; t < lf0.size(); ++t) {
    identity_err = std::max(identity_err, std::abs(same[t] - lf0[t]));
  }
  if (identity_err > 1e-12) failures.push_back("transform_lf0");

  std::uniform_int_distribution<int> length(1, 48000);
  int frame_mismatch = 0;
  for (int i = 0; i < 100; ++i) {
    AudioClip clip;
    clip.samples.assign(length(rng), 0.01);
    const int n = static_cast<int>(clip.samples.size());
    if (dsp::ComputeMel(clip).rows() != 1 + n / 200) ++frame_mismatch;
  }
  if (frame_mismatch != 0) failures.push_back("frames");

  Outcome o;
  o.pass = failures.empty();
  o.detail = Fmt("worst tone median err %.3f Hz, |pearson(x,x)-1|=%.1e, ",
                 worst_tone, std::abs(self_r - 1.0)) +
             Fmt("transform identity err %.1e, frame mismatches %.0f",
                 identity_err, frame_mismatch) +
             Fmt(" (%.1f s)", Seconds(t0));
  return o;
}

// ---------------------------------------------------------------- pipeline

struct Prepared {
  corpus::Manifest manifest;
  Dataset data;
  std::unique_ptr<ToyEncoder> encoder;
  std::vector<EvalPair> pairs;
  int target_speaker = -1;
  double corpus_seconds = 0.0;
};

Prepared Prepare(const RunConfig& cfg) {
  Prepared p;
  p.manifest = corpus::BuildCorpus(cfg.corpus, cfg.corpus_dir);
  for (const auto& r : p.manifest.records) p.corpus_seconds += r.duration;
  p.encoder = std::make_unique<ToyEncoder>(
      TrainToyEncoderOnManifest(p.manifest, cfg.toy_encoder));
  const FeatureReport rep = ExtractFeatures(p.manifest, cfg.features_dir,
                                            cfg.content, p.encoder.get());
  if (!rep.failed.empty()) throw DataError("feature extraction failed");
  p.data = LoadDataset(p.manifest, cfg.features_dir, cfg.content.dim);
  const EvalPlan plan;
  p.target_speaker = plan.ResolveTarget(p.manifest);
  p.pairs = BuildEvalPairs(p.manifest, p.data, plan);
  return p;
}

struct SystemRun {
  std::vector<PairMetrics> pairs;
  double mean_lf0 = 0.0;
  double mean_energy = 0.0;
  std::string phase2_checksum;
  std::string phase3_checksum;
  std::vector<std::string> changed;  // parameters altered by phase 3
  std::unique_ptr<VcModel> base;     // phase-2 model
};

SystemRun RunSystem(const RunConfig& cfg, const Prepared& prep,
                    bool use_prosody) {
  ModelConfig mc = cfg.model;
  mc.num_speakers = static_cast<int>(prep.data.TrainSpeakers().size());
  mc.content_dim = cfg.content.dim;
  mc.use_prosody = use_prosody;
  mc.Finalize();
  VcModel model(mc, Mix(cfg.seed, kStageModelInit));
  Phase1Train(&model, prep.data, cfg.corpus.normalization_speaker, cfg.phase1,
              Mix(cfg.seed, kStagePhase1));
  Phase2Train(&model, prep.data, cfg.phase2, Mix(cfg.seed, kStagePhase2));

  SystemRun run;
  run.phase2_checksum = model.params().Checksum();
  run.base = std::make_unique<VcModel>(mc, 0);
  run.base->params().CopyValuesFrom(model.params());

  std::map<std::string, std::string> before;
  for (const std::string& n : model.params().Names()) {
    before[n] = model.params().Checksum(n);
  }
  const UtteranceData* adapt = prep.data.Find(prep.target_speaker, 0);
  Phase3Adapt(&model, {adapt}, cfg.phase3, Mix(cfg.seed, kStagePhase3));
  for (const std::string& n : model.params().Names()) {
    if (model.params().Checksum(n) != before[n]) run.changed.push_back(n);
  }
  run.phase3_checksum = model.params().Checksum();

  const dsp::ProsodyFeatures ap =
      dsp::ProsodyFeatures::FromMatrix(adapt->prosody);
  run.pairs =
      EvaluatePairs(model, prep.pairs, adapt->mel,
                    dsp::ComputeF0Stats(ap.lf0, ap.vuv), adapt->speaker);
  for (const PairMetrics& m : run.pairs) {
    run.mean_lf0 += m.r_lf0 / run.pairs.size();
    run.mean_energy += m.r_energy / run.pairs.size();
  }
  return run;
}

struct EndToEnd {
  Prepared prep;
  SystemRun full;
  SystemRun ablation;
  double seconds = 0.0;
};

EndToEnd RunEndToEnd(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  EndToEnd e;
  e.prep = Prepare(cfg);
  e.full = RunSystem(cfg, e.prep, true);
  e.ablation = RunSystem(cfg, e.prep, false);
  e.seconds = Seconds(t0);
  return e;
}

RunConfig AcceptanceConfig(const fs::path& workdir) {
  RunConfig cfg = DeskRunConfig();
  cfg.corpus_dir = workdir / "corpus";
  cfg.features_dir = workdir / "features";
  cfg.checkpoint_dir = workdir / "checkpoints";
  cfg.report_dir = workdir / "reports";
  cfg.Validate();
  return cfg;
}

double BaseF0(const corpus::Manifest& m, int speaker) {
  for (const auto& r : m.records) {
    if (r.speaker_index == speaker) return r.profile.base_f0;
  }
  return 0.0;
}

double BaseF0(const corpus::Manifest& m, const std::string& speaker) {
  for (const auto& r : m.records) {
    if (r.speaker == speaker) return r.profile.base_f0;
  }
  return 0.0;
}

// ---------------------------------------------------------------- C2

Outcome Freezing(const EndToEnd& e) {
  std::vector<std::string> outside;
  for (const std::string& n : e.full.changed) {
    if (!nn::MatchesAnyPrefix(n, AdaptablePrefixes())) outside.push_back(n);
  }
  Outcome o;
  o.pass = outside.empty() && !e.full.changed.empty();
  o.detail = std::to_string(e.full.changed.size()) +
             " adapted tensors changed, " + std::to_string(outside.size()) +
             " non-adaptable tensors changed";
  if (!outside.empty()) o.detail += " (first: " + outside.front() + ")";
  return o;
}

// ---------------------------------------------------------------- C3

Outcome RegularizationEffect(const RunConfig& cfg, const EndToEnd& e) {
  const auto t0 = Clock::now();
  const UtteranceData* adapt = e.prep.data.Find(e.prep.target_speaker, 0);
  const std::vector<double> gammas = {0.0, 1.0, 1e6};
  std::vector<std::vector<double>> drift(gammas.size());
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    for (size_t g = 0; g < gammas.size(); ++g) {
      VcModel model(e.full.base->config(), 0);
      model.params().CopyValuesFrom(e.full.base->params());
      PhaseConfig pc = cfg.phase3;
      pc.steps = 500;
      pc.gamma = gammas[g];
      drift[g].push_back(
          Phase3Adapt(&model, {adapt}, pc, Mix(seed, kStagePhase3))
              .final_drift);
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double m0 = median(drift[0]), m1 = median(drift[1]),
               m6 = median(drift[2]);
  Outcome o;
  o.pass = m1 < m0 && m6 < 0.1 * m0;
  o.detail = Fmt("median drift gamma=0: %.4f, gamma=1: %.4f, gamma=1e6: %.4f",
                 m0, m1, m6) +
             Fmt(" (ratio %.4f, %.1f s)", m6 / m0, Seconds(t0));
  return o;
}

// ---------------------------------------------------------------- C5, C6

Outcome StyleTransfer(const EndToEnd& e) {
  const double gap = e.full.mean_lf0 - e.ablation.mean_lf0;
  Outcome o;
  o.pass = e.full.pairs.size() == 9 && e.full.mean_lf0 >= 0.70 && gap >= 0.10 &&
           e.prep.corpus_seconds <= 240.0 && e.seconds <= 45 * 60;
  o.detail = Fmt("mean lf0 r full=%.4f ablation=%.4f gap=%.4f", e.full.mean_lf0,
                 e.ablation.mean_lf0, gap) +
             Fmt("; energy r full=%.4f ablation=%.4f; corpus %.1f s; %.1f s",
                 e.full.mean_energy, e.ablation.mean_energy,
                 e.prep.corpus_seconds, e.seconds);
  return o;
}

Outcome SpeakerIdentity(const EndToEnd& e) {
  const double target = BaseF0(e.prep.manifest, e.prep.target_speaker);
  int ok = 0;
  std::ostringstream medians;
  for (const PairMetrics& m : e.full.pairs) {
    const double source = BaseF0(e.prep.manifest, m.source);
    const bool within = std::abs(m.median_f0 - target) <= 0.15 * target;
    const bool closer =
        std::abs(m.median_f0 - target) < std::abs(m.median_f0 - source);
    if (within && closer) ++ok;
    medians << " " << static_cast<int>(std::lround(m.median_f0));
  }
  Outcome o;
  o.pass = ok >= 8;
  o.detail = std::to_string(ok) + "/9 pairs; target base " +
             Fmt("%.1f Hz; medians", target) + medians.str();
  return o;
}

// ---------------------------------------------------------------- C7

Outcome Sweep(const RunConfig& cfg, const EndToEnd& e) {
  const auto t0 = Clock::now();
  const EvalPlan plan;
  const AudioClip target = ConcatenateTargetAudio(e.prep.manifest, plan);
  const ToyEncoder* enc = e.prep.encoder.get();
  const ContentFn content = [enc](const MelSpectrogram& mel) {
    return enc->Infer(mel);
  };
  const DurationSweepReport r =
      DurationSweep(*e.full.base, target, DefaultSweepDurations(), e.prep.pairs,
                    content, cfg.phase3, Mix(cfg.seed, kStagePhase3));
  fs::create_directories(cfg.report_dir);
  std::ofstream(cfg.report_dir / "duration_sweep.txt") << r.ToTable();
  bool finite = r.rows.size() == 5;
  double mcd1 = NAN, mcd6 = NAN;
  std::ostringstream rows;
  for (const DurationSweepRow& row : r.rows) {
    finite = finite && std::isfinite(row.mcd) && std::isfinite(row.r_lf0) &&
             std::abs(row.r_lf0) <= 1.0;
    if (row.duration == 1.0) mcd1 = row.mcd;
    if (row.duration == 6.0) mcd6 = row.mcd;
    rows << Fmt(" %gs:%.3f/%.2f", row.duration, row.r_lf0, row.mcd);
  }
  Outcome o;
  o.pass = finite && mcd6 <= mcd1 && Seconds(t0) <= 3600;
  o.detail =
      std::to_string(r.rows.size()) + " rows (lf0 r/MCD dB)" + rows.str() +
      Fmt("; MCD 6 s %.3f vs 1 s %.3f (%.1f s)", mcd6, mcd1, Seconds(t0));
  return o;
}

// ---------------------------------------------------------------- C9

bool SameMetrics(const SystemRun& a, const SystemRun& b) {
  if (a.pairs.size() != b.pairs.size()) return false;
  if (a.phase2_checksum != b.phase2_checksum ||
      a.phase3_checksum != b.phase3_checksum) {
    return false;
  }
  for (size_t i = 0; i < a.pairs.size(); ++i) {
    const PairMetrics& x = a.pairs[i];
    const PairMetrics& y = b.pairs[i];
    if (x.pair_id != y.pair_id || x.r_lf0 != y.r_lf0 ||
        x.r_energy != y.r_energy || x.median_f0 != y.median_f0 ||
        !(x.mcd == y.mcd || (std::isnan(x.mcd) && std::isnan(y.mcd)))) {
      return false;
    }
  }
  return a.mean_lf0 == b.mean_lf0 && a.mean_energy == b.mean_energy;
}

Outcome Determinism(const fs::path& workdir, const EndToEnd& first) {
  const EndToEnd again = RunEndToEnd(AcceptanceConfig(workdir / "repeat"));
  const bool corpus_same =
      first.prep.manifest.Serialize() == again.prep.manifest.Serialize();
  Outcome o;
  o.pass = corpus_same && SameMetrics(first.full, again.full) &&
           SameMetrics(first.ablation, again.ablation);
  o.detail = std::string("manifest ") +
             (corpus_same ? "identical" : "differs") +
             Fmt(", repeat mean lf0 r full=%.17g ablation=%.17g (%.1f s)",
                 again.full.mean_lf0, again.ablation.mean_lf0, again.seconds);
  return o;
}

}  // namespace
}  // namespace osvc

int main(int argc, char** argv) {
  using namespace osvc;
  CLI::App app("osvc acceptance run");
  std::string workdir =
      (fs::temp_directory_path() / "osvc_acceptance").string();
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--only", only, "Criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  auto wanted = [&](int c) {
    return only.empty() || std::find(only.begin(), only.end(), c) != only.end();
  };
  fs::remove_all(workdir);
  fs::create_directories(workdir);

  std::map<int, Outcome> results;
  auto record = [&](int c, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    results[c] = o;
    std::cerr << "[criterion " << c << " done] " << o.detail << std::endl;
  };

  if (wanted(1)) record(1, WregSuite);
  if (wanted(8)) record(8, DspSuite);

  const bool needs_e2e = wanted(2) || wanted(3) || wanted(4) || wanted(5) ||
                         wanted(6) || wanted(7) || wanted(9);
  std::optional<EndToEnd> e2e;
  const RunConfig cfg = AcceptanceConfig(fs::path(workdir) / "main");
  if (needs_e2e) {
    try {
      e2e.emplace(RunEndToEnd(cfg));
    } catch (const std::exception& e) {
      for (int c : {2, 3, 4, 5, 6, 7, 9}) {
        if (wanted(c))
          results[c] = {false, std::string("exception: ") + e.what()};
      }
    }
  }
  if (e2e) {
    if (wanted(2)) record(2, [&] { return Freezing(*e2e); });
    if (wanted(4)) record(4, [&] { return GradientIntegrity(e2e->prep.data); });
    if (wanted(5)) record(5, [&] { return StyleTransfer(*e2e); });
    if (wanted(6)) record(6, [&] { return SpeakerIdentity(*e2e); });
    if (wanted(3)) record(3, [&] { return RegularizationEffect(cfg, *e2e); });
    if (wanted(7)) record(7, [&] { return Sweep(cfg, *e2e); });
    if (wanted(9)) record(9, [&] { return Determinism(workdir, *e2e); });
  }

  bool all = true;
  for (const auto& [c, o] : results) {
    std::cout << "C" << c << " " << (o.pass ? "PASS" : "FAIL") << "  "
              << o.detail << "\n";
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
