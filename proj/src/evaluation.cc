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

#include "osvc/evaluation.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#include "osvc/convert.h"
#include "osvc/errors.h"

namespace osvc {

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw InvalidArgument("pearson: length mismatch " +
                          std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()));
  }
  if (x.size() < 2) throw InvalidArgument("pearson: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw DegenerateInput("pearson: constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ProsodyCorr ProsodyCorrelation(const dsp::ProsodyFeatures& source,
                               const dsp::ProsodyFeatures& converted) {
  const size_t n = std::min(source.num_frames(), converted.num_frames());
  ProsodyCorr out;
  std::vector<double> ea(source.energy.begin(), source.energy.begin() + n);
  std::vector<double> eb(converted.energy.begin(),
                         converted.energy.begin() + n);
  std::vector<double> fa, fb;
  for (size_t t = 0; t < n; ++t) {
    if (source.vuv[t] > 0.5 && converted.vuv[t] > 0.5) {
      fa.push_back(source.lf0[t]);
      fb.push_back(converted.lf0[t]);
    }
  }
  out.voiced_overlap = static_cast<int>(fa.size());
  if (fa.size() < 2) {
    throw DegenerateInput("prosody correlation: " + std::to_string(fa.size()) +
                          " mutually voiced frames");
  }
  out.r_energy = Pearson(ea, eb);
  out.r_lf0 = Pearson(fa, fb);
  return out;
}

ProsodyCorr ProsodyCorrelation(const AudioClip& source,
                               const AudioClip& converted) {
  return ProsodyCorrelation(dsp::ExtractProsody(source),
                            dsp::ExtractProsody(converted));
}

Matrix MelCepstrum(const MelSpectrogram& mel) {
  if (mel.cols() != kNumMels) {
    throw InvalidArgument("mel cepstrum: expected " + std::to_string(kNumMels) +
                          " bands, got " + std::to_string(mel.cols()));
  }
  static const Matrix basis = [] {
    // Orthonormal DCT-II rows 1..kMcdOrder, stored as bands x order.
    Matrix b(kNumMels, kMcdOrder);
    const double scale = std::sqrt(2.0 / kNumMels);
    for (int n = 0; n < kNumMels; ++n) {
      for (int k = 1; k <= kMcdOrder; ++k) {
        b(n, k - 1) = scale * std::cos(M_PI * k * (n + 0.5) / kNumMels);
      }
    }
    return b;
  }();
  return mel * basis;
}

double Mcd(const MelSpectrogram& a, const MelSpectrogram& b) {
  const Eigen::Index n = std::min(a.rows(), b.rows());
  if (n == 0) throw InvalidArgument("mcd: empty frame overlap");
  const Matrix ca = MelCepstrum(a.topRows(n));
  const Matrix cb = MelCepstrum(b.topRows(n));
  double total = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    total += (ca.row(t) - cb.row(t)).norm();
  }
  return kMcdConstant * total / static_cast<double>(n);
}

namespace {

struct Rgb {
  double r, g, b;
};

// Black -> purple -> red -> yellow -> white.
constexpr Rgb kColourStops[] = {{0.0, 0.0, 0.0},
                                {0.35, 0.05, 0.5},
                                {0.85, 0.15, 0.2},
                                {1.0, 0.75, 0.1},
                                {1.0, 1.0, 0.9}};
constexpr int kNumStops = sizeof(kColourStops) / sizeof(kColourStops[0]);

void Colour(double v, png_byte* px) {
  double u = (v - kImageMin) / (kImageMax - kImageMin);
  u = std::clamp(u, 0.0, 1.0) * (kNumStops - 1);
  const int i = std::min(static_cast<int>(u), kNumStops - 2);
  const double f = u - i;
  const Rgb& a = kColourStops[i];
  const Rgb& b = kColourStops[i + 1];
  px[0] = static_cast<png_byte>(std::lround(255.0 * (a.r + f * (b.r - a.r))));
  px[1] = static_cast<png_byte>(std::lround(255.0 * (a.g + f * (b.g - a.g))));
  px[2] = static_cast<png_byte>(std::lround(255.0 * (a.b + f * (b.b - a.b))));
}

struct FileCloser {
  void operator()(FILE* f) const { std::fclose(f); }
};

}  // namespace

void EmitSpectrogramImage(const MelSpectrogram& mel,
                          const std::filesystem::path& path) {
  if (mel.rows() == 0 || mel.cols() == 0) {
    throw InvalidArgument("spectrogram image: empty mel");
  }
  if (!mel.allFinite()) {
    throw InvalidArgument("spectrogram image: non-finite mel values");
  }
  const int width = static_cast<int>(mel.rows());
  const int height = static_cast<int>(mel.cols());
  std::vector<png_byte> pixels(static_cast<size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y) {
    const int band = height - 1 - y;
    for (int x = 0; x < width; ++x) {
      Colour(mel(x, band), &pixels[(static_cast<size_t>(y) * width + x) * 3]);
    }
  }

  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) {
    throw InvalidArgument("spectrogram image: cannot write " + path.string());
  }
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("spectrogram image: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("spectrogram image: libpng error writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);

  std::ostringstream lo, hi;
  lo << std::setprecision(17) << kImageMin;
  hi << std::setprecision(17) << kImageMax;
  std::string keys[] = {"Description", "osvc:vmin", "osvc:vmax",
                        "osvc:colormap", "osvc:axes"};
  std::string values[] = {
      "log-mel spectrogram heat map", lo.str(), hi.str(),
      "linear black-purple-red-yellow-white over [vmin, vmax], clipped",
      "x = frame (12.5 ms), y = mel band, band 0 at bottom"};
  png_text text[5];
  for (int i = 0; i < 5; ++i) {
    text[i].compression = PNG_TEXT_COMPRESSION_NONE;
    text[i].key = keys[i].data();
    text[i].text = values[i].data();
    text[i].text_length = values[i].size();
  }
  png_set_text(png, info, text, 5);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, &pixels[static_cast<size_t>(y) * width * 3]);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) {
    throw DataError("spectrogram image: write failed for " + path.string());
  }
}

double MedianVoicedF0(const dsp::ProsodyFeatures& prosody) {
  std::vector<double> hz;
  for (size_t t = 0; t < prosody.num_frames(); ++t) {
    if (prosody.vuv[t] > 0.5) hz.push_back(std::exp(prosody.lf0[t]));
  }
  if (hz.empty()) return 0.0;
  std::sort(hz.begin(), hz.end());
  const size_t m = hz.size() / 2;
  return hz.size() % 2 ? hz[m] : 0.5 * (hz[m - 1] + hz[m]);
}

void ProsodyCorrReport::Aggregate() {
  for (System& s : systems) {
    s.mean_r_energy = 0.0;
    s.mean_r_lf0 = 0.0;
    if (s.pairs.empty()) continue;
    for (const PairMetrics& p : s.pairs) {
      s.mean_r_energy += p.r_energy;
      s.mean_r_lf0 += p.r_lf0;
    }
    s.mean_r_energy /= static_cast<double>(s.pairs.size());
    s.mean_r_lf0 /= static_cast<double>(s.pairs.size());
  }
}

namespace {

nlohmann::json NumberOrNull(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json PairJson(const PairMetrics& p) {
  return {{"pair_id", p.pair_id},      {"source", p.source},
          {"target", p.target},        {"r_energy", p.r_energy},
          {"r_lf0", p.r_lf0},          {"median_f0", p.median_f0},
          {"mcd", NumberOrNull(p.mcd)}};
}

}  // namespace

nlohmann::json ProsodyCorrReport::ToJson() const {
  nlohmann::json j;
  j["systems"] = nlohmann::json::array();
  for (const System& s : systems) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const PairMetrics& p : s.pairs) pairs.push_back(PairJson(p));
    j["systems"].push_back({{"name", s.name},
                            {"num_pairs", s.pairs.size()},
                            {"mean_r_energy", s.mean_r_energy},
                            {"mean_r_lf0", s.mean_r_lf0},
                            {"pairs", pairs}});
  }
  return j;
}

std::string ProsodyCorrReport::ToTable() const {
  size_t w = 6;
  for (const System& s : systems) w = std::max(w, s.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "System"
     << "  " << std::right << std::setw(8) << "Energy" << "  " << std::setw(8)
     << "Lf0" << "  " << std::setw(5) << "Pairs" << "\n";
  os << std::fixed << std::setprecision(3);
  for (const System& s : systems) {
    os << std::left << std::setw(static_cast<int>(w)) << s.name << "  "
       << std::right << std::setw(8) << s.mean_r_energy << "  " << std::setw(8)
       << s.mean_r_lf0 << "  " << std::setw(5) << s.pairs.size() << "\n";
  }
  return os.str();
}

std::vector<PairMetrics> EvaluatePairs(const VcModel& model,
                                       const std::vector<EvalPair>& pairs,
                                       const MelSpectrogram& target_reference,
                                       const dsp::F0Stats& target_stats,
                                       const std::string& target_name) {
  std::vector<PairMetrics> out;
  out.reserve(pairs.size());
  for (const EvalPair& pair : pairs) {
    const ConvertResult res = Convert(pair.source_audio, pair.source_bn,
                                      target_reference, target_stats, model);
    const dsp::ProsodyFeatures conv = dsp::ExtractProsody(res.audio);
    const ProsodyCorr corr = ProsodyCorrelation(res.source_prosody, conv);
    PairMetrics m;
    m.pair_id = pair.pair_id;
    m.source = pair.source_speaker;
    m.target = target_name;
    m.r_energy = corr.r_energy;
    m.r_lf0 = corr.r_lf0;
    m.median_f0 = MedianVoicedF0(conv);
    m.mcd = pair.ground_truth.rows() > 0
                ? Mcd(res.mel_post, pair.ground_truth)
                : std::numeric_limits<double>::quiet_NaN();
    out.push_back(std::move(m));
  }
  return out;
}

nlohmann::json DurationSweepReport::ToJson() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const DurationSweepRow& r : rows) {
    rows_json.push_back({{"duration", r.duration},
                         {"r_lf0", r.r_lf0},
                         {"r_energy", r.r_energy},
                         {"mcd", NumberOrNull(r.mcd)},
                         {"base_checksum", r.base_checksum}});
  }
  return {{"rows", rows_json}};
}

std::string DurationSweepReport::ToTable() const {
  std::ostringstream os;
  os << std::setw(8) << "Dur(s)" << "  " << std::setw(8) << "Lf0" << "  "
     << std::setw(8) << "Energy" << "  " << std::setw(8) << "MCD(dB)"
     << "\n";
  os << std::fixed;
  for (const DurationSweepRow& r : rows) {
    os << std::setprecision(1) << std::setw(8) << r.duration << "  "
       << std::setprecision(3) << std::setw(8) << r.r_lf0 << "  "
       << std::setw(8) << r.r_energy << "  " << std::setprecision(2)
       << std::setw(8) << r.mcd << "\n";
  }
  return os.str();
}

UtteranceData ExtractUtterance(const AudioClip& audio,
                               const ContentFn& content) {
  UtteranceData u;
  u.mel = dsp::ComputeMel(audio);
  u.prosody = dsp::ExtractProsody(audio).AsMatrix();
  u.bn = content(u.mel);
  if (u.bn.rows() != u.mel.rows()) {
    throw InvalidArgument("content features have " +
                          std::to_string(u.bn.rows()) + " frames, mel has " +
                          std::to_string(u.mel.rows()));
  }
  return u;
}

DurationSweepReport DurationSweep(
    const VcModel& base, const AudioClip& target_audio,
    const std::vector<double>& durations, const std::vector<EvalPair>& pairs,
    const ContentFn& content, const PhaseConfig& adaptation, uint64_t seed) {
  if (durations.empty()) throw InvalidArgument("duration sweep: no durations");
  if (pairs.empty()) throw InvalidArgument("duration sweep: no eval pairs");
  const double longest = *std::max_element(durations.begin(), durations.end());
  if (target_audio.duration() + 1e-9 < longest) {
    std::ostringstream os;
    os << "duration sweep: target audio is " << target_audio.duration()
       << " s, need " << longest << " s";
    throw InvalidArgument(os.str());
  }
  const std::string base_checksum = base.params().Checksum();
  DurationSweepReport report;
  for (double d : durations) {
    if (!(d > 0.0)) throw InvalidArgument("duration sweep: bad duration");
    AudioClip clip;
    clip.sample_rate = target_audio.sample_rate;
    const size_t n = static_cast<size_t>(std::lround(d * clip.sample_rate));
    clip.samples.assign(target_audio.samples.begin(),
                        target_audio.samples.begin() + n);
    UtteranceData adapt = ExtractUtterance(clip, content);
    adapt.utt_id = "sweep_" + std::to_string(n);

    VcModel model(base.config(), seed);
    model.params().CopyValuesFrom(base.params());
    if (model.params().Checksum() != base_checksum) {
      throw DataError("duration sweep: base model copy mismatch");
    }
    Phase3Adapt(&model, {&adapt}, adaptation, seed);

    const dsp::ProsodyFeatures ap =
        dsp::ProsodyFeatures::FromMatrix(adapt.prosody);
    const dsp::F0Stats stats = dsp::ComputeF0Stats(ap.lf0, ap.vuv);
    const std::vector<PairMetrics> m =
        EvaluatePairs(model, pairs, adapt.mel, stats, "target");
    DurationSweepRow row;
    row.duration = d;
    row.base_checksum = base_checksum;
    for (const PairMetrics& p : m) {
      row.r_lf0 += p.r_lf0 / m.size();
      row.r_energy += p.r_energy / m.size();
      row.mcd += p.mcd / m.size();
    }
    report.rows.push_back(row);
  }
  if (base.params().Checksum() != base_checksum) {
    throw DataError("duration sweep: base model was modified");
  }
  return report;
}

}  // namespace osvc
