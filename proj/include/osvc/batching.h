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

#ifndef OSVC_BATCHING_H_
#define OSVC_BATCHING_H_

#include <random>
#include <vector>

#include "osvc/types.h"

namespace osvc {

struct Chunk {
  int item = 0;   // index into the caller's sequence list
  int start = 0;  // first frame
};

// Cuts every sequence into non-overlapping windows of `length` frames from a
// random offset, then shuffles. Sequences shorter than `length` contribute
// one window at 0 (callers choose `length` <= the shortest sequence).
std::vector<Chunk> EpochChunks(const std::vector<int>& lengths, int length,
                               std::mt19937_64& rng);

// Stacks rows [start, start + length) of each sequence time-major:
// row t * n + i holds frame start_i + t of sequence i.
Matrix GatherTimeMajor(const std::vector<const Matrix*>& seqs,
                       const std::vector<int>& starts, int length);

// Inverse of GatherTimeMajor for one item.
Matrix ExtractItem(const Matrix& time_major, int batch, int item);

template <typename T>
void Shuffle(std::vector<T>* v, std::mt19937_64& rng);

}  // namespace osvc

#include "osvc/random.h"

namespace osvc {

// Fisher-Yates with the portable uniform draw.
template <typename T>
void Shuffle(std::vector<T>* v, std::mt19937_64& rng) {
  for (int i = static_cast<int>(v->size()) - 1; i > 0; --i) {
    std::swap((*v)[i], (*v)[UniformInt(rng, i + 1)]);
  }
}

}  // namespace osvc

#endif  // OSVC_BATCHING_H_
