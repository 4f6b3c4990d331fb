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

#ifndef OSVC_TESTS_TEST_UTIL_H_
#define OSVC_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <string>

#include "osvc/types.h"

namespace osvc::testing {

inline AudioClip Tone(double hz, double seconds, double amplitude = 0.5) {
  AudioClip clip;
  const int n = static_cast<int>(std::lround(seconds * kSampleRate));
  clip.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    clip.samples[i] = amplitude * std::sin(2.0 * M_PI * hz * i / kSampleRate);
  }
  return clip;
}

inline AudioClip Silence(double seconds) {
  AudioClip clip;
  clip.samples.assign(static_cast<size_t>(seconds * kSampleRate), 0.0);
  return clip;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("osvc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace osvc::testing

#endif  // OSVC_TESTS_TEST_UTIL_H_
