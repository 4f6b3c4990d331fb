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

#include "osvc/batching.h"

#include "osvc/errors.h"

namespace osvc {

std::vector<Chunk> EpochChunks(const std::vector<int>& lengths, int length,
                               std::mt19937_64& rng) {
  if (length <= 0) throw InvalidArgument("chunk length must be positive");
  std::vector<Chunk> chunks;
  for (size_t i = 0; i < lengths.size(); ++i) {
    const int n = lengths[i];
    if (n <= length) {
      chunks.push_back({static_cast<int>(i), 0});
      continue;
    }
    const int offset = UniformInt(rng, std::min(length, n - length + 1));
    for (int s = offset; s + length <= n; s += length) {
      chunks.push_back({static_cast<int>(i), s});
    }
  }
  Shuffle(&chunks, rng);
  return chunks;
}

Matrix GatherTimeMajor(const std::vector<const Matrix*>& seqs,
                       const std::vector<int>& starts, int length) {
  if (seqs.empty() || seqs.size() != starts.size()) {
    throw InvalidArgument("GatherTimeMajor: bad batch description");
  }
  const int n = static_cast<int>(seqs.size());
  const int64_t cols = seqs[0]->cols();
  Matrix out(static_cast<int64_t>(length) * n, cols);
  for (int i = 0; i < n; ++i) {
    const Matrix& s = *seqs[i];
    if (s.cols() != cols || starts[i] < 0 || starts[i] + length > s.rows()) {
      throw InvalidArgument("GatherTimeMajor: window out of range");
    }
    for (int t = 0; t < length; ++t) {
      out.row(static_cast<int64_t>(t) * n + i) = s.row(starts[i] + t);
    }
  }
  return out;
}

Matrix ExtractItem(const Matrix& time_major, int batch, int item) {
  const int64_t steps = time_major.rows() / batch;
  Matrix out(steps, time_major.cols());
  for (int64_t t = 0; t < steps; ++t)
    out.row(t) = time_major.row(t * batch + item);
  return out;
}

}  // namespace osvc
