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

#ifndef OSVC_WAV_IO_H_
#define OSVC_WAV_IO_H_

#include <filesystem>
#include <string>

#include "osvc/types.h"

namespace osvc {

// RIFF/WAVE, 16-bit PCM, mono. Samples are clipped to [-1, 1].
std::string EncodeWav(const AudioClip& clip);
void WriteWav(const std::filesystem::path& path, const AudioClip& clip);

// Accepts mono PCM16 or IEEE float32. Throws DataError otherwise.
AudioClip DecodeWav(const std::string& bytes);
AudioClip ReadWav(const std::filesystem::path& path);

}  // namespace osvc

#endif  // OSVC_WAV_IO_H_
