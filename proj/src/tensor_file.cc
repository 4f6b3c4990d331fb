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

#include "osvc/tensor_file.h"

#include <bit>
#include <cmath>
#include <cstring>

#include "osvc/errors.h"
#include "osvc/file_util.h"

namespace osvc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor payloads are written in host order");

const char* DTypeName(DType d) {
  return d == DType::kFloat32 ? "float32" : "float64";
}

DType ParseDType(const std::string& s) {
  if (s == "float32") return DType::kFloat32;
  if (s == "float64") return DType::kFloat64;
  throw DataError("unsupported tensor dtype '" + s + "'");
}

size_t ElementSize(DType d) { return d == DType::kFloat32 ? 4 : 8; }

}  // namespace

int64_t TensorRecord::num_elements() const {
  int64_t n = 1;
  for (int64_t s : shape) n *= s;
  return n;
}

std::string EncodeTensor(const TensorRecord& record) {
  if (static_cast<int64_t>(record.data.size()) != record.num_elements()) {
    throw InvalidArgument("tensor '" + record.name +
                          "': data size does not match shape");
  }
  nlohmann::json header = record.extra;
  header["name"] = record.name;
  header["shape"] = record.shape;
  header["dtype"] = DTypeName(record.dtype);
  header["byte_order"] = "little";
  header["frame_shift"] = record.frame_shift;
  const std::string text = header.dump();

  std::string out(kTensorMagic.begin(), kTensorMagic.end());
  const uint32_t len = static_cast<uint32_t>(text.size());
  out.append(reinterpret_cast<const char*>(&len), 4);
  out += text;
  const size_t payload_offset = out.size();
  out.resize(payload_offset + record.data.size() * ElementSize(record.dtype));
  char* dst = out.data() + payload_offset;
  if (record.dtype == DType::kFloat32) {
    for (size_t i = 0; i < record.data.size(); ++i) {
      const float v = static_cast<float>(record.data[i]);
      std::memcpy(dst + 4 * i, &v, 4);
    }
  } else {
    std::memcpy(dst, record.data.data(), record.data.size() * 8);
  }
  return out;
}

TensorRecord DecodeTensor(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kTensorMagic.data(),
                                       kTensorMagic.size()) != 0) {
    throw DataError("not a tensor container (bad magic)");
  }
  uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 16, 4);
  if (bytes.size() < 20ull + len) throw DataError("truncated tensor header");
  nlohmann::json header;
  try {
    header =
        nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + len);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tensor header: ") + e.what());
  }
  TensorRecord r;
  try {
    r.name = header.at("name").get<std::string>();
    r.shape = header.at("shape").get<std::vector<int64_t>>();
    r.dtype = ParseDType(header.at("dtype").get<std::string>());
    r.frame_shift = header.value("frame_shift", 0.0);
    if (header.value("byte_order", std::string("little")) != "little") {
      throw DataError("only little-endian payloads are supported");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tensor header: ") + e.what());
  }
  for (int64_t s : r.shape) {
    if (s < 0) throw DataError("negative dimension in tensor header");
  }
  for (const char* key :
       {"name", "shape", "dtype", "byte_order", "frame_shift"}) {
    header.erase(key);
  }
  r.extra = std::move(header);

  const size_t offset = 20 + len;
  const size_t n = static_cast<size_t>(r.num_elements());
  if (bytes.size() - offset != n * ElementSize(r.dtype)) {
    throw DataError("tensor '" + r.name + "': payload size mismatch");
  }
  r.data.resize(n);
  const char* src = bytes.data() + offset;
  if (r.dtype == DType::kFloat32) {
    for (size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, src + 4 * i, 4);
      r.data[i] = v;
    }
  } else {
    std::memcpy(r.data.data(), src, n * 8);
  }
  for (double v : r.data) {
    if (!std::isfinite(v))
      throw DataError("tensor '" + r.name + "' has non-finite values");
  }
  return r;
}

void WriteTensorFile(const std::filesystem::path& path,
                     const TensorRecord& record) {
  WriteFileAtomic(path, EncodeTensor(record));
}

TensorRecord ReadTensorFile(const std::filesystem::path& path) {
  return DecodeTensor(ReadFileBytes(path));
}

TensorRecord MatrixRecord(const std::string& name, const Matrix& m, DType dtype,
                          double frame_shift) {
  TensorRecord r;
  r.name = name;
  r.shape = {m.rows(), m.cols()};
  r.dtype = dtype;
  r.frame_shift = frame_shift;
  r.data.assign(m.data(), m.data() + m.size());
  return r;
}

Matrix RecordToMatrix(const TensorRecord& record) {
  if (record.shape.size() != 2) {
    throw DataError("tensor '" + record.name + "' is not 2-D");
  }
  Matrix m(record.shape[0], record.shape[1]);
  std::copy(record.data.begin(), record.data.end(), m.data());
  return m;
}

}  // namespace osvc
