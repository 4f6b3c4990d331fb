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

#ifndef OSVC_CONVERT_H_
#define OSVC_CONVERT_H_

#include "osvc/content.h"
#include "osvc/dsp.h"
#include "osvc/model.h"
#include "osvc/types.h"

namespace osvc {

struct ConvertResult {
  MelSpectrogram mel_post;
  AudioClip audio;
  dsp::ProsodyFeatures source_prosody;
  dsp::ProsodyFeatures converted_prosody;  // lf0 mapped onto target stats
};

// Content and prosody from the source, speaker identity from the target
// reference; source lf0 is mapped onto the target's lf0 statistics.
// Throws DegenerateInput when the source has no voiced frames.
ConvertResult Convert(const AudioClip& source, const ContentFeatures& source_bn,
                      const MelSpectrogram& target_reference,
                      const dsp::F0Stats& target_stats, const VcModel& model,
                      int vocoder_iterations = 48);

}  // namespace osvc

#endif  // OSVC_CONVERT_H_
