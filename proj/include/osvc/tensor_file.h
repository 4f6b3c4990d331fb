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

#ifndef OSVC_TENSOR_FILE_H_
#define OSVC_TENSOR_FILE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "osvc/types.h"

namespace osvc {

// Single-tensor binary container:
//   bytes 0..15  magic "\x89OSVC-TENSOR\r\n\x1a\n"
//   bytes 16..19 uint32 little-endian length L of the JSON header
//   next L bytes UTF-8 JSON: {"name", "shape", "dtype", "frame_shift", ...}
//   remainder    row-major little-endian payload of the declared dtype
inline constexpr std::array<char, 16> kTensorMagic = {
    '\x89', 'O', 'S', 'V', 'C',  '-',  'T',    'E',
    'N',    'S', 'O', 'R', '\r', '\n', '\x1a', '\n'};

enum class DType { kFloat32, kFloat64 };

struct TensorRecord {
  std::string name;
  std::vector<int64_t> shape;
  DType dtype = DType::kFloat32;
  double frame_shift = 0.0;  // seconds; 0 when not a frame sequence
  nlohmann::json extra = nlohmann::json::object();
  std::vector<double> data;

  int64_t num_elements() const;
};

std::string EncodeTensor(const TensorRecord& record);
TensorRecord DecodeTensor(const std::string& bytes);

void WriteTensorFile(const std::filesystem::path& path,
                     const TensorRecord& record);
TensorRecord ReadTensorFile(const std::filesystem::path& path);

// 2-D convenience wrappers.
TensorRecord MatrixRecord(const std::string& name, const Matrix& m,
                          DType dtype = DType::kFloat32,
                          double frame_shift = kFrameShiftSeconds);
Matrix RecordToMatrix(const TensorRecord& record);

}  // namespace osvc

#endif  // OSVC_TENSOR_FILE_H_
