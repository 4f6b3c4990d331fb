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

#ifndef OSVC_DSP_H_
#define OSVC_DSP_H_

#include <cstddef>
#include <vector>

#include "osvc/types.h"

namespace osvc::dsp {

inline constexpr int kFftSize = 1024;
inline constexpr int kNumBins = kFftSize / 2 + 1;
inline constexpr double kMelFloor = 1e-5;
inline constexpr double kMinF0 = 50.0;
inline constexpr double kMaxF0 = 500.0;
inline constexpr double kVoicingThreshold = 0.3;
inline constexpr double kEnergySpreadFloor = 0.1;

// 1 + floor(num_samples / 200): one frame centred on every hop position.
int NumFrames(size_t num_samples);

// 80 x 513 HTK-style triangular filterbank (peak 1) over 0..8 kHz.
const Matrix& MelFilterbank();
double HzToMel(double hz);
double MelToHz(double mel);
// Centre frequency of mel band `band`.
double MelBandCenterHz(int band);

// Frames x 80 log mel magnitudes, floor-clamped at kMelFloor before the log.
MelSpectrogram ComputeMel(const AudioClip& audio);

struct PitchTrack {
  std::vector<double> lf0;  // ln(Hz) when voiced, 0 otherwise
  std::vector<double> vuv;  // 0 or 1
};

// Normalised-autocorrelation tracker, one estimate per mel frame.
PitchTrack ExtractF0(const AudioClip& audio);

// Per-frame (Hann-weighted) mean absolute amplitude, z-normalised over the
// utterance. The divisor is max(std, kEnergySpreadFloor * mean).
std::vector<double> FrameEnergy(const AudioClip& audio);

struct ProsodyFeatures {
  std::vector<double> lf0;
  std::vector<double> vuv;
  std::vector<double> energy;

  size_t num_frames() const { return lf0.size(); }
  // frames x 3 matrix with columns (lf0, vuv, energy).
  Matrix AsMatrix() const;
  static ProsodyFeatures FromMatrix(const Matrix& m);
};

ProsodyFeatures ExtractProsody(const AudioClip& audio);

struct F0Stats {
  double mean_lf0 = 0.0;
  double std_lf0 = 0.0;  // population standard deviation
};

// Throws DegenerateInput when no frame is voiced.
F0Stats ComputeF0Stats(const std::vector<double>& lf0,
                       const std::vector<double>& vuv);

// Affine map of voiced lf0 from source statistics onto target statistics.
std::vector<double> TransformLf0(const std::vector<double>& lf0,
                                 const std::vector<double>& vuv,
                                 const F0Stats& src, const F0Stats& tgt);

// Phase reconstruction (fast Griffin-Lim) from a log-mel spectrogram. Output
// holds frames * 200 samples.
AudioClip ReconstructWaveform(const MelSpectrogram& mel, int iterations = 48);

// Magnitude spectrum helpers shared with tests and evaluation.
double RootMeanSquare(const std::vector<double>& x);
// Frequency (Hz) of the largest |DFT| bin of the whole signal.
double DominantFrequency(const AudioClip& audio);

}  // namespace osvc::dsp

#endif  // OSVC_DSP_H_
