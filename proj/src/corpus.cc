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

#include "osvc/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <system_error>

#include "osvc/dsp.h"
#include "osvc/errors.h"
#include "osvc/file_util.h"
#include "osvc/random.h"
#include "osvc/wav_io.h"

namespace osvc::corpus {
namespace {

constexpr double kLeadSilence = 0.12;
constexpr double kTrailSilence = 0.12;
constexpr double kGap = 0.07;
constexpr double kRamp = 0.015;
constexpr double kVoicedRms = 0.1;
constexpr double kNoiseStd = 0.002;
constexpr double kMaxHarmonicHz = 7000.0;
constexpr int kEnvelopeBlock = 32;

struct Formant {
  double freq;
  double bandwidth;
};

// (F1, F2, F3) for /a e i o u/ at formant_scale 1.
constexpr double kVowelFormants[kNumVowels][3] = {{730, 1090, 2440},
                                                  {530, 1840, 2480},
                                                  {270, 2290, 3010},
                                                  {570, 840, 2410},
                                                  {300, 870, 2240}};
constexpr double kBandwidths[3] = {80, 100, 120};

// Cascade formant model: unit gain at DC, peak F/B at each resonance, on top
// of a -6 dB/octave source (1/k harmonic amplitudes) and the speaker's tilt.
double Envelope(double f, const std::vector<Formant>& formants,
                const SpeakerProfile& p, int harmonic) {
  double v = 1.0 / harmonic;
  for (const auto& fm : formants) {
    const double re = fm.freq * fm.freq - f * f;
    const double im = f * fm.bandwidth;
    v *= fm.freq * fm.freq / std::sqrt(re * re + im * im);
  }
  const double octaves = std::log2(f / 100.0);
  return v * std::pow(10.0, p.tilt_db_per_octave * octaves / 20.0);
}

nlohmann::json SegmentsToJson(const std::vector<Segment>& segs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : segs) a.push_back({s.symbol, s.start, s.end});
  return a;
}

std::vector<Segment> SegmentsFromJson(const nlohmann::json& a) {
  std::vector<Segment> segs;
  for (const auto& e : a) {
    segs.push_back(
        {e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});
  }
  return segs;
}

nlohmann::json ProfileToJson(const SpeakerProfile& p) {
  return {{"id", p.id},
          {"index", p.index},
          {"base_f0", p.base_f0},
          {"formant_scale", p.formant_scale},
          {"tilt_db_per_octave", p.tilt_db_per_octave}};
}

SpeakerProfile ProfileFromJson(const nlohmann::json& j) {
  SpeakerProfile p;
  p.id = j.at("id").get<std::string>();
  p.index = j.at("index").get<int>();
  p.base_f0 = j.at("base_f0").get<double>();
  p.formant_scale = j.at("formant_scale").get<double>();
  p.tilt_db_per_octave = j.at("tilt_db_per_octave").get<double>();
  return p;
}

}  // namespace

double Contour::At(double u) const {
  if (knots.empty()) return 1.0;
  if (u <= knots.front().first) return knots.front().second;
  for (size_t i = 1; i < knots.size(); ++i) {
    if (u <= knots[i].first) {
      const auto& [t0, v0] = knots[i - 1];
      const auto& [t1, v1] = knots[i];
      const double w = t1 > t0 ? (u - t0) / (t1 - t0) : 1.0;
      return v0 + w * (v1 - v0);
    }
  }
  return knots.back().second;
}

SpeakerProfile BuildSpeaker(uint64_t seed, int index) {
  if (index < 0 || index >= kMaxSpeakers) {
    throw InvalidArgument("speaker index must be in [0, " +
                          std::to_string(kMaxSpeakers) + ")");
  }
  // Seeded permutation of the 10 Hz pitch grid keeps speakers >= 10 Hz apart.
  std::vector<int> slots(kMaxSpeakers);
  for (int i = 0; i < kMaxSpeakers; ++i) slots[i] = i;
  std::mt19937_64 perm(Mix(seed, 0x5eaf));
  for (int i = kMaxSpeakers - 1; i > 0; --i) {
    const int j = static_cast<int>(perm() % static_cast<uint64_t>(i + 1));
    std::swap(slots[i], slots[j]);
  }
  std::mt19937_64 rng(Mix(seed, 1000 + static_cast<uint64_t>(index)));
  SpeakerProfile p;
  p.index = index;
  char id[16];
  std::snprintf(id, sizeof(id), "spk%02d", index);
  p.id = id;
  p.base_f0 = 90.0 + 10.0 * slots[index];
  // Higher voices get shorter vocal tracts on average.
  const double rel = (p.base_f0 - 90.0) / 210.0;
  p.formant_scale =
      std::clamp(0.85 + 0.3 * rel + 0.1 * (Uniform(rng) - 0.5), 0.8, 1.25);
  p.tilt_db_per_octave = -3.0 - 6.0 * Uniform(rng);
  return p;
}

const std::vector<StyleTemplate>& BuiltinStyles() {
  static const std::vector<StyleTemplate> styles = {
      {"flat", {{{0, 1}, {1, 1}}}, {{{0, 1}, {1, 1}}}, 2.5},
      {"neutral", {{{0, 1.08}, {1, 0.92}}}, {{{0, 1.0}, {1, 0.8}}}, 2.5},
      {"rising",
       {{{0, 0.85}, {0.7, 1.0}, {1, 1.25}}},
       {{{0, 0.8}, {1, 1.1}}},
       2.5},
      {"falling",
       {{{0, 1.25}, {0.4, 1.05}, {1, 0.8}}},
       {{{0, 1.2}, {1, 0.6}}},
       3.0},
      {"wave",
       {{{0, 1.0}, {0.25, 1.2}, {0.5, 0.9}, {0.75, 1.2}, {1, 0.85}}},
       {{{0, 1.0}, {0.25, 1.2}, {0.5, 0.7}, {0.75, 1.1}, {1, 0.8}}},
       3.0},
      {"emphatic",
       {{{0, 0.9}, {0.3, 1.3}, {0.45, 0.95}, {1, 0.85}}},
       {{{0, 0.7}, {0.3, 1.3}, {0.5, 0.8}, {1, 0.9}}},
       2.5},
  };
  return styles;
}

const StyleTemplate& FindStyle(const std::string& name) {
  for (const auto& s : BuiltinStyles()) {
    if (s.name == name) return s;
  }
  throw InvalidArgument("unknown style '" + name + "'");
}

Utterance SynthUtterance(const SpeakerProfile& profile,
                         const std::vector<int>& script,
                         const StyleTemplate& style, double duration,
                         uint64_t seed) {
  if (script.empty()) throw InvalidArgument("empty script");
  if (!(duration >= 1.0 && duration <= 15.0)) {
    throw InvalidArgument("duration must be within [1, 15] s");
  }
  if (!(profile.formant_scale > 0.0)) {
    throw InvalidArgument("formant_scale must be positive");
  }
  for (int s : script) {
    if (s < 0 || s >= kNumVowels) throw InvalidArgument("unknown vowel symbol");
  }
  const int n = static_cast<int>(script.size());
  const double seg_len =
      (duration - kLeadSilence - kTrailSilence - kGap * (n - 1)) / n;
  if (seg_len < 0.1) {
    throw InvalidArgument("script too long for the requested duration");
  }

  Utterance utt;
  utt.speaker = profile.id;
  utt.script = script;
  utt.style = style.name;
  const int total = static_cast<int>(std::lround(duration * kSampleRate));
  utt.audio.sample_rate = kSampleRate;
  utt.audio.samples.assign(total, 0.0);

  std::mt19937_64 rng(Mix(seed, 0x0a0d));
  std::vector<double> voiced_gain(total, 0.0);
  double phase = 0.0;
  for (int s = 0; s < n; ++s) {
    Segment seg;
    seg.symbol = script[s];
    seg.start = kLeadSilence + s * (seg_len + kGap);
    seg.end = seg.start + seg_len;
    utt.segments.push_back(seg);

    std::vector<Formant> formants;
    for (int i = 0; i < 3; ++i) {
      formants.push_back({kVowelFormants[seg.symbol][i] * profile.formant_scale,
                          kBandwidths[i] * profile.formant_scale});
    }
    const int first = static_cast<int>(std::lround(seg.start * kSampleRate));
    const int last =
        std::min(total, static_cast<int>(std::lround(seg.end * kSampleRate)));
    std::vector<double> amps;
    for (int i = first; i < last; ++i) {
      const double t = static_cast<double>(i) / kSampleRate;
      const double u = t / duration;
      const double f0 = profile.base_f0 * style.f0.At(u);
      if ((i - first) % kEnvelopeBlock == 0) {
        const int k_max = static_cast<int>(kMaxHarmonicHz / f0);
        amps.assign(k_max, 0.0);
        double power = 0.0;
        for (int k = 1; k <= k_max; ++k) {
          amps[k - 1] = Envelope(k * f0, formants, profile, k);
          power += 0.5 * amps[k - 1] * amps[k - 1];
        }
        const double norm = kVoicedRms * style.energy.At(u) / std::sqrt(power);
        for (double& a : amps) a *= norm;
      }
      phase += 2.0 * std::numbers::pi * f0 / kSampleRate;
      if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
      double x = 0.0;
      for (size_t k = 0; k < amps.size(); ++k) {
        x += amps[k] * std::sin((k + 1) * phase);
      }
      const double from_start = t - seg.start;
      const double to_end = seg.end - t;
      double ramp = 1.0;
      if (from_start < kRamp) {
        ramp = 0.5 - 0.5 * std::cos(std::numbers::pi * from_start / kRamp);
      } else if (to_end < kRamp) {
        ramp = 0.5 - 0.5 * std::cos(std::numbers::pi * to_end / kRamp);
      }
      utt.audio.samples[i] = ramp * x;
      voiced_gain[i] = ramp;
    }
  }
  // Breath-like noise wherever the voice source is not at full level.
  for (int i = 0; i < total; ++i) {
    const double noise = kNoiseStd * Normal(rng);
    utt.audio.samples[i] += (1.0 - voiced_gain[i]) * noise;
    utt.audio.samples[i] = std::clamp(utt.audio.samples[i], -1.0, 1.0);
  }
  return utt;
}

std::vector<int> FrameLabels(const std::vector<Segment>& segments,
                             int num_frames) {
  std::vector<int> labels(num_frames, kSilenceLabel);
  for (int t = 0; t < num_frames; ++t) {
    const double centre = t * kFrameShiftSeconds;
    for (const auto& s : segments) {
      if (centre >= s.start && centre < s.end) {
        labels[t] = s.symbol;
        break;
      }
    }
  }
  return labels;
}

nlohmann::json CorpusConfig::ToJson() const {
  return {{"seed", seed},
          {"n_speakers", n_speakers},
          {"utterances_per_speaker", utterances_per_speaker},
          {"held_out", held_out},
          {"test_per_speaker", test_per_speaker},
          {"min_duration", min_duration},
          {"max_duration", max_duration},
          {"normalization_speaker", normalization_speaker},
          {"styles", styles}};
}

CorpusConfig CorpusConfig::FromJson(const nlohmann::json& j) {
  CorpusConfig c;
  c.seed = j.value("seed", c.seed);
  c.n_speakers = j.value("n_speakers", c.n_speakers);
  c.utterances_per_speaker =
      j.value("utterances_per_speaker", c.utterances_per_speaker);
  c.held_out = j.value("held_out", c.held_out);
  c.test_per_speaker = j.value("test_per_speaker", c.test_per_speaker);
  c.min_duration = j.value("min_duration", c.min_duration);
  c.max_duration = j.value("max_duration", c.max_duration);
  c.normalization_speaker =
      j.value("normalization_speaker", c.normalization_speaker);
  c.styles = j.value("styles", c.styles);
  return c;
}

const ManifestRecord* Manifest::Find(int speaker_index, int item) const {
  for (const auto& r : records) {
    if (r.speaker_index == speaker_index && r.item == item) return &r;
  }
  return nullptr;
}

std::vector<const ManifestRecord*> Manifest::BySpeaker(
    int speaker_index) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.speaker_index == speaker_index) out.push_back(&r);
  }
  return out;
}

std::vector<const ManifestRecord*> Manifest::BySplit(
    const std::string& split) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

int Manifest::NumTrainSpeakers() const {
  int n = 0;
  for (const auto& r : records) {
    if (r.in_train) n = std::max(n, r.speaker_index + 1);
  }
  return n;
}

std::vector<int> Manifest::HeldOutSpeakers() const {
  std::vector<int> out;
  for (const auto& r : records) {
    if (!r.in_train &&
        std::find(out.begin(), out.end(), r.speaker_index) == out.end()) {
      out.push_back(r.speaker_index);
    }
  }
  return out;
}

std::string Manifest::Serialize() const {
  std::ostringstream os;
  for (const auto& r : records) {
    nlohmann::json j = {{"utt_id", r.utt_id},
                        {"path", r.path},
                        {"speaker", r.speaker},
                        {"speaker_index", r.speaker_index},
                        {"item", r.item},
                        {"style", r.style},
                        {"script", r.script},
                        {"segments", SegmentsToJson(r.segments)},
                        {"duration", r.duration},
                        {"split", r.split},
                        {"in_train", r.in_train},
                        {"seed", r.seed},
                        {"profile", ProfileToJson(r.profile)},
                        {"corpus", config.ToJson()}};
    os << j.dump() << '\n';
  }
  return os.str();
}

Manifest Manifest::Load(const std::filesystem::path& manifest_path) {
  Manifest m;
  m.root = manifest_path.parent_path();
  std::ifstream in(manifest_path);
  if (!in)
    throw InvalidArgument("cannot open manifest " + manifest_path.string());
  std::string line;
  bool have_config = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestRecord r;
      r.utt_id = j.at("utt_id").get<std::string>();
      r.path = j.at("path").get<std::string>();
      r.speaker = j.at("speaker").get<std::string>();
      r.speaker_index = j.value("speaker_index", 0);
      r.item = j.value("item", 0);
      r.style = j.at("style").get<std::string>();
      r.script = j.at("script").get<std::vector<int>>();
      if (j.contains("segments")) r.segments = SegmentsFromJson(j["segments"]);
      r.duration = j.at("duration").get<double>();
      r.split = j.at("split").get<std::string>();
      r.in_train = j.value("in_train", r.split != "heldout");
      r.seed = j.value("seed", uint64_t{0});
      if (j.contains("profile")) r.profile = ProfileFromJson(j["profile"]);
      if (!have_config && j.contains("corpus")) {
        m.config = CorpusConfig::FromJson(j["corpus"]);
        have_config = true;
      }
      m.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(manifest_path.string() + ":" + std::to_string(line_no) +
                      ": " + e.what());
    }
  }
  return m;
}

void Manifest::Save() const {
  WriteFileAtomic(root / "manifest.jsonl", Serialize());
}

Manifest BuildCorpus(const CorpusConfig& config,
                     const std::filesystem::path& root) {
  if (config.n_speakers < 2) throw InvalidArgument("n_speakers must be >= 2");
  if (config.utterances_per_speaker < 2) {
    throw InvalidArgument("utterances_per_speaker must be >= 2");
  }
  if (config.held_out < 0 || config.held_out >= config.n_speakers) {
    throw InvalidArgument("held_out must leave at least one training speaker");
  }
  if (config.test_per_speaker < 0 ||
      config.test_per_speaker >= config.utterances_per_speaker) {
    throw InvalidArgument("test_per_speaker must leave training items");
  }
  if (config.normalization_speaker < 0 ||
      config.normalization_speaker >= config.n_speakers - config.held_out) {
    throw InvalidArgument("normalization speaker must be a training speaker");
  }
  if (config.styles.empty()) throw InvalidArgument("no styles configured");
  if (!(config.min_duration >= 1.0 && config.max_duration <= 15.0 &&
        config.min_duration <= config.max_duration)) {
    throw InvalidArgument("durations must satisfy 1 <= min <= max <= 15");
  }
  std::error_code ec;
  std::filesystem::create_directories(root / "wav", ec);
  if (ec) {
    throw InvalidArgument("cannot create output directory " +
                          (root / "wav").string() + ": " + ec.message());
  }

  Manifest m;
  m.root = root;
  m.config = config;
  std::vector<SpeakerProfile> speakers;
  for (int s = 0; s < config.n_speakers; ++s) {
    speakers.push_back(BuildSpeaker(config.seed, s));
  }
  const int first_held_out = config.n_speakers - config.held_out;
  const int first_test =
      config.utterances_per_speaker - config.test_per_speaker;
  for (int item = 0; item < config.utterances_per_speaker; ++item) {
    std::mt19937_64 rng(Mix(config.seed, 0x17e0 + static_cast<uint64_t>(item)));
    const StyleTemplate& style =
        FindStyle(config.styles[item % config.styles.size()]);
    const double duration =
        config.min_duration +
        (config.max_duration - config.min_duration) * Uniform(rng);
    const int n_symbols = std::max(
        1, static_cast<int>(std::lround(duration * style.segment_rate)));
    std::vector<int> script;
    for (int k = 0; k < n_symbols; ++k) {
      int sym = static_cast<int>(rng() % kNumVowels);
      if (!script.empty() && sym == script.back()) sym = (sym + 1) % kNumVowels;
      script.push_back(sym);
    }
    for (int s = 0; s < config.n_speakers; ++s) {
      ManifestRecord r;
      r.speaker = speakers[s].id;
      r.speaker_index = s;
      r.item = item;
      char id[32];
      std::snprintf(id, sizeof(id), "%s_item%03d", r.speaker.c_str(), item);
      r.utt_id = id;
      r.path = "wav/" + r.utt_id + ".wav";
      r.style = style.name;
      r.script = script;
      r.duration = duration;
      r.in_train = s < first_held_out;
      r.split =
          !r.in_train ? "heldout" : (item >= first_test ? "test" : "train");
      r.seed = Mix(config.seed, (static_cast<uint64_t>(item) << 16) | s);
      r.profile = speakers[s];
      Utterance utt =
          SynthUtterance(speakers[s], script, style, duration, r.seed);
      r.segments = utt.segments;
      WriteWav(m.AudioPath(r), utt.audio);
      m.records.push_back(std::move(r));
    }
  }
  std::stable_sort(m.records.begin(), m.records.end(),
                   [](const ManifestRecord& a, const ManifestRecord& b) {
                     return a.speaker_index < b.speaker_index;
                   });
  m.Save();
  return m;
}

Utterance RenderParallel(const ManifestRecord& record,
                         const SpeakerProfile& profile) {
  return SynthUtterance(profile, record.script, FindStyle(record.style),
                        record.duration, record.seed);
}

}  // namespace osvc::corpus
