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

#ifndef OSVC_EVALUATION_H_
#define OSVC_EVALUATION_H_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "osvc/content.h"
#include "osvc/dsp.h"
#include "osvc/model.h"
#include "osvc/training.h"
#include "osvc/types.h"

namespace osvc {

// Sample Pearson correlation. Throws InvalidArgument on length mismatch or
// fewer than two samples and DegenerateInput when either input is constant.
double Pearson(const std::vector<double>& x, const std::vector<double>& y);

struct ProsodyCorr {
  double r_energy = 0.0;
  double r_lf0 = 0.0;
  int voiced_overlap = 0;  // frames voiced in both clips
};

// Energy over all frames (truncated to the shorter clip), lf0 over frames
// voiced in both.
ProsodyCorr ProsodyCorrelation(const dsp::ProsodyFeatures& source,
                               const dsp::ProsodyFeatures& converted);
ProsodyCorr ProsodyCorrelation(const AudioClip& source,
                               const AudioClip& converted);

// Cepstral coefficients used by Mcd: orthonormal DCT-II of each log-mel
// frame, coefficients 1..kMcdOrder (c0 is dropped).
inline constexpr int kMcdOrder = 24;
// 10 * sqrt(2) / ln(10): dB scaling of the Euclidean cepstral distance.
inline constexpr double kMcdConstant = 6.141851463713754;
Matrix MelCepstrum(const MelSpectrogram& mel);
// Mean over the overlapping frames of kMcdConstant * ||c_a - c_b||.
double Mcd(const MelSpectrogram& a, const MelSpectrogram& b);

// Fixed colour scale of emitted spectrograms (natural-log mel values).
inline constexpr double kImageMin = -11.512925464970229;  // ln(1e-5)
inline constexpr double kImageMax = 4.0;
// Heat map, one pixel column per frame, band 0 at the bottom. The scale and
// colour map are recorded as PNG text chunks.
void EmitSpectrogramImage(const MelSpectrogram& mel,
                          const std::filesystem::path& path);

struct PairMetrics {
  std::string pair_id;
  std::string source;
  std::string target;
  double r_energy = 0.0;
  double r_lf0 = 0.0;
  double median_f0 = 0.0;  // of the converted audio, Hz
  double mcd = 0.0;        // to the parallel ground truth, NaN if absent
};

struct ProsodyCorrReport {
  struct System {
    std::string name;
    std::vector<PairMetrics> pairs;
    double mean_r_energy = 0.0;
    double mean_r_lf0 = 0.0;
  };
  std::vector<System> systems;

  void Aggregate();
  nlohmann::json ToJson() const;
  // systems x {Energy, Lf0} table.
  std::string ToTable() const;
};

// Median of the voiced F0 values (Hz) of a pitch track; 0 if none voiced.
double MedianVoicedF0(const dsp::ProsodyFeatures& prosody);

// One source utterance to convert plus its parallel ground truth.
struct EvalPair {
  std::string pair_id;
  std::string source_speaker;
  AudioClip source_audio;
  ContentFeatures source_bn;
  MelSpectrogram ground_truth;  // target speaker's rendition; may be empty
};

// Content features for a mel, e.g. from a toy encoder.
using ContentFn = std::function<ContentFeatures(const MelSpectrogram&)>;

// Converts every pair towards `target_reference` and scores it.
std::vector<PairMetrics> EvaluatePairs(const VcModel& model,
                                       const std::vector<EvalPair>& pairs,
                                       const MelSpectrogram& target_reference,
                                       const dsp::F0Stats& target_stats,
                                       const std::string& target_name);

struct DurationSweepRow {
  double duration = 0.0;  // seconds of target audio used for adaptation
  double r_lf0 = 0.0;
  double r_energy = 0.0;
  double mcd = 0.0;
  std::string base_checksum;
};

struct DurationSweepReport {
  std::vector<DurationSweepRow> rows;
  nlohmann::json ToJson() const;
  std::string ToTable() const;
};

inline const std::vector<double>& DefaultSweepDurations() {
  static const std::vector<double> kDurations = {1, 3, 6, 9, 15};
  return kDurations;
}

// For each duration: truncate `target_audio`, adapt a private copy of `base`
// with phase 3 from the same seed, convert every pair and score it against
// its ground truth. Throws InvalidArgument if the target audio is shorter
// than the longest duration.
DurationSweepReport DurationSweep(const VcModel& base,
                                  const AudioClip& target_audio,
                                  const std::vector<double>& durations,
                                  const std::vector<EvalPair>& pairs,
                                  const ContentFn& content,
                                  const PhaseConfig& adaptation, uint64_t seed);

// Mel, prosody and content features of one clip.
UtteranceData ExtractUtterance(const AudioClip& audio,
                               const ContentFn& content);

}  // namespace osvc

#endif  // OSVC_EVALUATION_H_
