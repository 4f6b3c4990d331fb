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

#ifndef OSVC_CORPUS_H_
#define OSVC_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "osvc/types.h"

namespace osvc::corpus {

inline constexpr int kNumVowels = 5;
// Frame label for silence and inter-segment noise.
inline constexpr int kSilenceLabel = kNumVowels;
inline constexpr int kMaxSpeakers = 22;  // 90..300 Hz in 10 Hz steps

struct SpeakerProfile {
  std::string id;
  int index = 0;
  double base_f0 = 150.0;  // Hz
  double formant_scale = 1.0;
  double tilt_db_per_octave = -6.0;

  bool operator==(const SpeakerProfile&) const = default;
};

// Piecewise-linear multiplier curve over normalised time [0, 1].
struct Contour {
  std::vector<std::pair<double, double>> knots;  // (time, multiplier)
  double At(double u) const;
};

struct StyleTemplate {
  std::string name;
  Contour f0;
  Contour energy;
  double segment_rate = 2.0;  // segments per second
};

struct Segment {
  int symbol = 0;
  double start = 0.0;  // seconds
  double end = 0.0;
};

struct Utterance {
  AudioClip audio;
  std::string speaker;
  std::vector<int> script;
  std::string style;
  std::vector<Segment> segments;
};

SpeakerProfile BuildSpeaker(uint64_t seed, int index);

// The built-in style inventory; "flat" has all multipliers equal to 1.
const std::vector<StyleTemplate>& BuiltinStyles();
const StyleTemplate& FindStyle(const std::string& name);

Utterance SynthUtterance(const SpeakerProfile& profile,
                         const std::vector<int>& script,
                         const StyleTemplate& style, double duration,
                         uint64_t seed);

// Per-frame class labels (vowel id or kSilenceLabel) aligned to mel frames.
std::vector<int> FrameLabels(const std::vector<Segment>& segments,
                             int num_frames);

struct CorpusConfig {
  uint64_t seed = 13;
  int n_speakers = 7;
  int utterances_per_speaker = 10;
  int held_out = 1;          // last `held_out` speakers are not in training
  int test_per_speaker = 3;  // last items of training speakers
  double min_duration = 3.0;
  double max_duration = 3.5;
  int normalization_speaker = 0;
  std::vector<std::string> styles = {"neutral", "rising", "falling", "wave",
                                     "emphatic"};

  nlohmann::json ToJson() const;
  static CorpusConfig FromJson(const nlohmann::json& j);
};

struct ManifestRecord {
  std::string utt_id;
  std::string path;  // relative to the manifest directory
  std::string speaker;
  int speaker_index = 0;
  int item = 0;
  std::string style;
  std::vector<int> script;
  std::vector<Segment> segments;
  double duration = 0.0;
  std::string split;  // train | test | heldout
  bool in_train = true;
  uint64_t seed = 0;
  SpeakerProfile profile;
};

struct Manifest {
  std::filesystem::path root;  // directory holding manifest.jsonl
  CorpusConfig config;
  std::vector<ManifestRecord> records;

  std::filesystem::path AudioPath(const ManifestRecord& r) const {
    return root / r.path;
  }
  // Rendition of `item` by speaker `speaker_index`, or nullptr.
  const ManifestRecord* Find(int speaker_index, int item) const;
  std::vector<const ManifestRecord*> BySpeaker(int speaker_index) const;
  std::vector<const ManifestRecord*> BySplit(const std::string& split) const;
  int NumTrainSpeakers() const;
  std::vector<int> HeldOutSpeakers() const;

  std::string Serialize() const;  // JSON lines
  static Manifest Load(const std::filesystem::path& manifest_path);
  void Save() const;  // writes root/manifest.jsonl
};

// Renders every item for every speaker (a fully parallel corpus), writes
// root/wav/*.wav and root/manifest.jsonl.
Manifest BuildCorpus(const CorpusConfig& config,
                     const std::filesystem::path& root);

// Same script/style/duration/seed as `record`, voiced by `profile`.
Utterance RenderParallel(const ManifestRecord& record,
                         const SpeakerProfile& profile);

}  // namespace osvc::corpus

#endif  // OSVC_CORPUS_H_
