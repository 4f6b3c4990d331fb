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

#include "osvc/convert.h"

#include <string>

#include "osvc/errors.h"

namespace osvc {

ConvertResult Convert(const AudioClip& source, const ContentFeatures& source_bn,
                      const MelSpectrogram& target_reference,
                      const dsp::F0Stats& target_stats, const VcModel& model,
                      int vocoder_iterations) {
  ConvertResult result;
  result.source_prosody = dsp::ExtractProsody(source);
  const dsp::ProsodyFeatures& src = result.source_prosody;
  if (static_cast<int64_t>(src.num_frames()) != source_bn.rows()) {
    throw InvalidArgument(
        "source content features have " + std::to_string(source_bn.rows()) +
        " frames, audio has " + std::to_string(src.num_frames()));
  }
  const dsp::F0Stats src_stats = dsp::ComputeF0Stats(src.lf0, src.vuv);
  result.converted_prosody = src;
  result.converted_prosody.lf0 =
      dsp::TransformLf0(src.lf0, src.vuv, src_stats, target_stats);

  const ContentRepr content = model.ContentEncode(source_bn);
  const ProsodyRepr prosody =
      model.ProsodyForward(source_bn, result.converted_prosody);
  const SpeakerEmbedding speaker = model.SpeakerForward(target_reference);
  result.mel_post = model.ConversionForward(content, prosody, speaker).mel_post;
  result.audio = dsp::ReconstructWaveform(result.mel_post, vocoder_iterations);
  return result;
}

}  // namespace osvc
