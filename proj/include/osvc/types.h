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

#ifndef OSVC_TYPES_H_
#define OSVC_TYPES_H_

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace osvc {

// Row-major so that one row is one frame.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameLength = 800;  // 50 ms
inline constexpr int kFrameShift = 200;   // 12.5 ms
inline constexpr double kFrameShiftSeconds = 0.0125;
inline constexpr int kNumMels = 80;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// frames x 80 natural-log mel magnitudes.
using MelSpectrogram = Matrix;

}  // namespace osvc

#endif  // OSVC_TYPES_H_
