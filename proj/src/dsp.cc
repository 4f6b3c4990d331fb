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

#include "osvc/dsp.h"

#include <fftw3.h>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>

#include "osvc/errors.h"

namespace osvc::dsp {
namespace {

constexpr int kPad = kFrameLength / 2;

std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

// Real-to-complex / complex-to-real transforms of a fixed size. FFTW planning
// is not thread-safe, execution with private buffers is.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(PlannerMutex());
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* real() { return real_; }
  std::complex<double>* spectrum() {
    return reinterpret_cast<std::complex<double>*>(spec_);
  }
  void Forward() { fftw_execute(forward_); }
  // Unnormalised: result is n times the true inverse.
  void Inverse() { fftw_execute(inverse_); }
  int size() const { return n_; }

 private:
  int n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

const std::vector<double>& HannWindow() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kFrameLength);
    for (int i = 0; i < kFrameLength; ++i) {
      v[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kFrameLength);
    }
    return v;
  }();
  return w;
}

void CheckRate(const AudioClip& audio) {
  if (audio.sample_rate != kSampleRate) {
    throw InvalidArgument("expected 16000 Hz audio, got " +
                          std::to_string(audio.sample_rate));
  }
}

// Centre padding: reflect when the clip is long enough, zeros otherwise.
std::vector<double> PadCentered(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(n + 2 * kPad, 0.0);
  std::copy(x.begin(), x.end(), out.begin() + kPad);
  if (n > kPad) {
    for (int i = 0; i < kPad; ++i) {
      out[kPad - 1 - i] = x[i + 1];
      out[kPad + n + i] = x[n - 2 - i];
    }
  }
  return out;
}

// Frame t of the padded signal covers [t*shift, t*shift + frame_length).
const double* FrameStart(const std::vector<double>& padded, int t) {
  return padded.data() + static_cast<size_t>(t) * kFrameShift;
}

// frames x 513 magnitude spectrogram of the padded signal.
Matrix Magnitudes(const std::vector<double>& padded, int frames) {
  const auto& w = HannWindow();
  RealFft fft(kFftSize);
  Matrix mag(frames, kNumBins);
  const int offset = (kFftSize - kFrameLength) / 2;
  for (int t = 0; t < frames; ++t) {
    const double* f = FrameStart(padded, t);
    std::fill(fft.real(), fft.real() + kFftSize, 0.0);
    for (int i = 0; i < kFrameLength; ++i) fft.real()[offset + i] = f[i] * w[i];
    fft.Forward();
    for (int k = 0; k < kNumBins; ++k) mag(t, k) = std::abs(fft.spectrum()[k]);
  }
  return mag;
}

constexpr double kOctaveCost = 0.05;
// Frames quieter than this fraction of the loudest frame are unvoiced.
constexpr double kSilenceRatio = 0.03;
constexpr int kMedianRadius = 2;
constexpr double kPitchLowpassHz = 1000.0;
constexpr double kPitchLowpassStopHz = 1600.0;

// Zero-phase raised-cosine low-pass of the whole clip. The resolved low
// harmonics carry the periodicity; formant ringing above them only adds
// spurious correlation peaks.
std::vector<double> LowpassForPitch(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  int size = 1;
  while (size < n + kFrameLength) size <<= 1;
  RealFft fft(size);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  std::fill(fft.real(), fft.real() + size, 0.0);
  for (int i = 0; i < n; ++i) fft.real()[i] = x[i] - mean;
  fft.Forward();
  for (int k = 0; k <= size / 2; ++k) {
    const double f = static_cast<double>(k) * kSampleRate / size;
    double g = 0.0;
    if (f <= kPitchLowpassHz) {
      g = 1.0;
    } else if (f < kPitchLowpassStopHz) {
      const double u =
          (f - kPitchLowpassHz) / (kPitchLowpassStopHz - kPitchLowpassHz);
      g = 0.5 + 0.5 * std::cos(std::numbers::pi * u);
    }
    fft.spectrum()[k] *= g / size;
  }
  fft.Inverse();
  return std::vector<double>(fft.real(), fft.real() + n);
}

const Matrix& MelPseudoInverse() {
  static const Matrix pinv = [] {
    const Matrix& fb = MelFilterbank();
    Eigen::MatrixXd d = fb;
    Eigen::MatrixXd p = d.completeOrthogonalDecomposition().pseudoInverse();
    return Matrix(p);
  }();
  return pinv;
}

}  // namespace

int NumFrames(size_t num_samples) {
  return 1 + static_cast<int>(num_samples / kFrameShift);
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

double MelBandCenterHz(int band) {
  const double top = HzToMel(kSampleRate / 2.0);
  return MelToHz(top * (band + 1) / (kNumMels + 1));
}

const Matrix& MelFilterbank() {
  static const Matrix fb = [] {
    Matrix m = Matrix::Zero(kNumMels, kNumBins);
    const double top = HzToMel(kSampleRate / 2.0);
    std::vector<double> edges(kNumMels + 2);
    for (int i = 0; i < kNumMels + 2; ++i) {
      edges[i] = MelToHz(top * i / (kNumMels + 1));
    }
    for (int b = 0; b < kNumMels; ++b) {
      const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
      for (int k = 0; k < kNumBins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / kFftSize;
        double v = 0.0;
        if (f > lo && f <= mid)
          v = (f - lo) / (mid - lo);
        else if (f > mid && f < hi)
          v = (hi - f) / (hi - mid);
        m(b, k) = v;
      }
    }
    return m;
  }();
  return fb;
}

MelSpectrogram ComputeMel(const AudioClip& audio) {
  CheckRate(audio);
  if (audio.samples.empty()) throw InvalidArgument("empty audio");
  const int frames = NumFrames(audio.samples.size());
  const Matrix mag = Magnitudes(PadCentered(audio.samples), frames);
  Matrix mel = mag * MelFilterbank().transpose();
  return mel.unaryExpr(
      [](double v) { return std::log(std::max(v, kMelFloor)); });
}

PitchTrack ExtractF0(const AudioClip& audio) {
  CheckRate(audio);
  const int frames = NumFrames(audio.samples.size());
  PitchTrack track{std::vector<double>(frames, 0.0),
                   std::vector<double>(frames, 0.0)};
  if (audio.samples.empty()) return track;
  const std::vector<double> low = PadCentered(LowpassForPitch(audio.samples));
  const int n = static_cast<int>(audio.samples.size());
  const int min_lag = static_cast<int>(std::floor(kSampleRate / kMaxF0));
  const int max_lag = static_cast<int>(std::ceil(kSampleRate / kMinF0));

  // Edge frames slide inward so the analysis window holds real samples only.
  auto frame_data = [&](int t) {
    if (n >= kFrameLength) {
      const int start = std::clamp(t * kFrameShift - kPad, 0, n - kFrameLength);
      return low.data() + kPad + start;
    }
    return FrameStart(low, t);
  };
  std::vector<double> rms(frames, 0.0);
  double peak_rms = 0.0;
  for (int t = 0; t < frames; ++t) {
    const double* x = frame_data(t);
    double e = 0.0;
    for (int i = 0; i < kFrameLength; ++i) e += x[i] * x[i];
    rms[t] = std::sqrt(e / kFrameLength);
    peak_rms = std::max(peak_rms, rms[t]);
  }

  std::vector<double> r(max_lag + 2, 0.0);
  std::vector<double> cum(kFrameLength + 1, 0.0);
  for (int t = 0; t < frames; ++t) {
    if (rms[t] < 1e-6 || rms[t] < kSilenceRatio * peak_rms) continue;
    const double* x = frame_data(t);
    for (int i = 0; i < kFrameLength; ++i) cum[i + 1] = cum[i] + x[i] * x[i];
    double best = -1.0;
    for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      const int len = kFrameLength - lag;
      double acc = 0.0;
      for (int i = 0; i < len; ++i) acc += x[i] * x[i + lag];
      const double denom = std::sqrt(cum[len] * (cum[kFrameLength] - cum[lag]));
      r[lag] = denom > 0.0 ? acc / denom : 0.0;
      if (lag >= min_lag && lag <= max_lag) best = std::max(best, r[lag]);
    }
    if (best < kVoicingThreshold) continue;
    // Best local peak after a small per-octave penalty on long lags, so that
    // period multiples (which correlate about as well) lose to the period.
    int chosen = -1;
    double chosen_score = -1e9;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        const double score =
            r[lag] -
            kOctaveCost * std::log2(static_cast<double>(lag) / min_lag);
        if (score > chosen_score) {
          chosen_score = score;
          chosen = lag;
        }
      }
    }
    if (chosen < 0) continue;
    double delta = 0.0;
    const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
    const double curv = a - 2.0 * b + c;
    if (curv < 0.0) delta = std::clamp(0.5 * (a - c) / curv, -0.5, 0.5);
    const double f0 =
        std::clamp(kSampleRate / (chosen + delta), kMinF0, kMaxF0);
    track.lf0[t] = std::log(f0);
    track.vuv[t] = 1.0;
  }
  // Running median over voiced neighbours removes isolated octave slips at
  // voicing boundaries.
  std::vector<double> smoothed = track.lf0;
  std::vector<double> window;
  for (int t = 0; t < frames; ++t) {
    if (track.vuv[t] == 0.0) continue;
    window.clear();
    for (int k = std::max(0, t - kMedianRadius);
         k <= std::min(frames - 1, t + kMedianRadius); ++k) {
      if (track.vuv[k] != 0.0) window.push_back(track.lf0[k]);
    }
    std::nth_element(window.begin(), window.begin() + window.size() / 2,
                     window.end());
    smoothed[t] = window[window.size() / 2];
  }
  track.lf0 = std::move(smoothed);
  return track;
}

std::vector<double> FrameEnergy(const AudioClip& audio) {
  CheckRate(audio);
  const int frames = NumFrames(audio.samples.size());
  std::vector<double> e(frames, 0.0);
  if (audio.samples.empty()) return e;
  const std::vector<double> padded = PadCentered(audio.samples);
  const auto& w = HannWindow();
  double wsum = 0.0;
  for (double v : w) wsum += v;
  for (int t = 0; t < frames; ++t) {
    const double* x = FrameStart(padded, t);
    double acc = 0.0;
    for (int i = 0; i < kFrameLength; ++i) acc += w[i] * std::abs(x[i]);
    e[t] = acc / wsum;
  }
  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= frames;
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / frames);
  if (sd == 0.0) {
    std::fill(e.begin(), e.end(), 0.0);
    return e;
  }
  // Spread is floored at a tenth of the mean level so that window ripple on
  // stationary signals is not blown up to unit variance.
  const double scale = std::max(sd, kEnergySpreadFloor * mean);
  for (double& v : e) v = (v - mean) / scale;
  return e;
}

Matrix ProsodyFeatures::AsMatrix() const {
  Matrix m(static_cast<Eigen::Index>(lf0.size()), 3);
  for (size_t t = 0; t < lf0.size(); ++t) {
    m(t, 0) = lf0[t];
    m(t, 1) = vuv[t];
    m(t, 2) = energy[t];
  }
  return m;
}

ProsodyFeatures ProsodyFeatures::FromMatrix(const Matrix& m) {
  if (m.cols() != 3)
    throw InvalidArgument("prosody matrix must have 3 columns");
  ProsodyFeatures p;
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    p.lf0.push_back(m(t, 0));
    p.vuv.push_back(m(t, 1));
    p.energy.push_back(m(t, 2));
  }
  return p;
}

ProsodyFeatures ExtractProsody(const AudioClip& audio) {
  PitchTrack pitch = ExtractF0(audio);
  ProsodyFeatures p;
  p.lf0 = std::move(pitch.lf0);
  p.vuv = std::move(pitch.vuv);
  p.energy = FrameEnergy(audio);
  return p;
}

F0Stats ComputeF0Stats(const std::vector<double>& lf0,
                       const std::vector<double>& vuv) {
  if (lf0.size() != vuv.size())
    throw InvalidArgument("lf0/vuv length mismatch");
  double sum = 0.0;
  size_t n = 0;
  for (size_t t = 0; t < lf0.size(); ++t) {
    if (vuv[t] > 0.5) {
      sum += lf0[t];
      ++n;
    }
  }
  if (n == 0) throw DegenerateInput("no voiced frames for f0 statistics");
  F0Stats s;
  s.mean_lf0 = sum / n;
  double var = 0.0;
  for (size_t t = 0; t < lf0.size(); ++t) {
    if (vuv[t] > 0.5) var += (lf0[t] - s.mean_lf0) * (lf0[t] - s.mean_lf0);
  }
  s.std_lf0 = std::sqrt(var / n);
  return s;
}

std::vector<double> TransformLf0(const std::vector<double>& lf0,
                                 const std::vector<double>& vuv,
                                 const F0Stats& src, const F0Stats& tgt) {
  if (lf0.size() != vuv.size())
    throw InvalidArgument("lf0/vuv length mismatch");
  if (!(src.std_lf0 > 0.0)) {
    throw DegenerateInput("source f0 statistics have zero spread");
  }
  const double scale = tgt.std_lf0 / src.std_lf0;
  std::vector<double> out(lf0.size(), 0.0);
  for (size_t t = 0; t < lf0.size(); ++t) {
    if (vuv[t] > 0.5) out[t] = (lf0[t] - src.mean_lf0) * scale + tgt.mean_lf0;
  }
  return out;
}

AudioClip ReconstructWaveform(const MelSpectrogram& mel, int iterations) {
  if (mel.cols() != kNumMels || mel.rows() == 0) {
    throw InvalidArgument("reconstruct_waveform expects a frames x 80 mel");
  }
  const int frames = static_cast<int>(mel.rows());
  Matrix target = mel.array().exp().matrix() * MelPseudoInverse().transpose();
  target = target.cwiseMax(0.0);

  const auto& w = HannWindow();
  const int offset = (kFftSize - kFrameLength) / 2;
  const int padded_len = (frames - 1) * kFrameShift + kFrameLength;
  const int out_len = frames * kFrameShift;

  // Sum of squared windows for least-squares overlap-add.
  std::vector<double> wsq(padded_len, 0.0);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < kFrameLength; ++i)
      wsq[t * kFrameShift + i] += w[i] * w[i];
  }

  using Complex = std::complex<double>;
  std::vector<Complex> phase(static_cast<size_t>(frames) * kNumBins);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  for (auto& p : phase) p = std::polar(1.0, uni(rng));
  std::vector<Complex> prev(phase.size(), Complex(0.0, 0.0));
  std::vector<Complex> estimate(phase.size());
  std::vector<double> signal(padded_len);
  RealFft fft(kFftSize);
  const double momentum = 0.99;

  auto synthesize = [&](const std::vector<Complex>& ph) {
    std::fill(signal.begin(), signal.end(), 0.0);
    for (int t = 0; t < frames; ++t) {
      for (int k = 0; k < kNumBins; ++k) {
        fft.spectrum()[k] = target(t, k) * ph[t * kNumBins + k];
      }
      fft.Inverse();
      for (int i = 0; i < kFrameLength; ++i) {
        signal[t * kFrameShift + i] += fft.real()[offset + i] / kFftSize * w[i];
      }
    }
    for (int i = 0; i < padded_len; ++i) {
      if (wsq[i] > 1e-8) signal[i] /= wsq[i];
    }
  };

  for (int it = 0; it < iterations; ++it) {
    synthesize(phase);
    for (int t = 0; t < frames; ++t) {
      std::fill(fft.real(), fft.real() + kFftSize, 0.0);
      for (int i = 0; i < kFrameLength; ++i) {
        fft.real()[offset + i] = signal[t * kFrameShift + i] * w[i];
      }
      fft.Forward();
      for (int k = 0; k < kNumBins; ++k) {
        const size_t idx = static_cast<size_t>(t) * kNumBins + k;
        estimate[idx] = fft.spectrum()[k];
        Complex p = estimate[idx] - (momentum / (1.0 + momentum)) * prev[idx];
        const double a = std::abs(p);
        phase[idx] = a > 1e-12 ? p / a : Complex(1.0, 0.0);
        prev[idx] = estimate[idx];
      }
    }
  }
  synthesize(phase);

  AudioClip out;
  out.sample_rate = kSampleRate;
  out.samples.assign(signal.begin() + kPad,
                     signal.begin() + std::min(padded_len, kPad + out_len));
  out.samples.resize(out_len, 0.0);
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

double RootMeanSquare(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / x.size());
}

double DominantFrequency(const AudioClip& audio) {
  const int n = static_cast<int>(audio.samples.size());
  if (n < 2) throw InvalidArgument("signal too short");
  RealFft fft(n);
  std::copy(audio.samples.begin(), audio.samples.end(), fft.real());
  fft.Forward();
  int best = 1;
  for (int k = 1; k <= n / 2; ++k) {
    if (std::abs(fft.spectrum()[k]) > std::abs(fft.spectrum()[best])) best = k;
  }
  return static_cast<double>(best) * audio.sample_rate / n;
}

}  // namespace osvc::dsp
