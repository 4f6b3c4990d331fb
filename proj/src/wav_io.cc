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

#include "osvc/wav_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "osvc/errors.h"
#include "osvc/file_util.h"

namespace osvc {
namespace {

void PutU32(std::string* s, uint32_t v) {
  s->append(reinterpret_cast<const char*>(&v), 4);
}
void PutU16(std::string* s, uint16_t v) {
  s->append(reinterpret_cast<const char*>(&v), 2);
}

uint32_t GetU32(const std::string& s, size_t pos) {
  uint32_t v;
  std::memcpy(&v, s.data() + pos, 4);
  return v;
}
uint16_t GetU16(const std::string& s, size_t pos) {
  uint16_t v;
  std::memcpy(&v, s.data() + pos, 2);
  return v;
}

}  // namespace

std::string EncodeWav(const AudioClip& clip) {
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);  // PCM
  PutU16(&out, 1);  // mono
  PutU32(&out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(&out, static_cast<uint32_t>(clip.sample_rate * 2));
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (double x : clip.samples) {
    const double c = std::clamp(x, -1.0, 1.0);
    const auto v = static_cast<int16_t>(std::lround(c * 32767.0));
    out.append(reinterpret_cast<const char*>(&v), 2);
  }
  return out;
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip) {
  WriteFileAtomic(path, EncodeWav(clip));
}

AudioClip DecodeWav(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw DataError("not a RIFF/WAVE file");
  }
  size_t pos = 12;
  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const uint32_t size = GetU32(bytes, pos + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size())
      throw DataError("truncated WAV chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw DataError("short fmt chunk");
      format = GetU16(bytes, body);
      channels = GetU16(bytes, body + 2);
      rate = GetU32(bytes, body + 4);
      bits = GetU16(bytes, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError("data chunk before fmt chunk");
      if (channels != 1) throw DataError("only mono WAV is supported");
      AudioClip clip;
      clip.sample_rate = static_cast<int>(rate);
      if (format == 1 && bits == 16) {
        clip.samples.resize(size / 2);
        for (size_t i = 0; i < clip.samples.size(); ++i) {
          int16_t v;
          std::memcpy(&v, bytes.data() + body + 2 * i, 2);
          clip.samples[i] = v / 32767.0;
        }
      } else if (format == 3 && bits == 32) {
        clip.samples.resize(size / 4);
        for (size_t i = 0; i < clip.samples.size(); ++i) {
          float v;
          std::memcpy(&v, bytes.data() + body + 4 * i, 4);
          if (!std::isfinite(v)) throw DataError("non-finite sample in WAV");
          clip.samples[i] = v;
        }
      } else {
        throw DataError("unsupported WAV encoding (need PCM16 or float32)");
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw DataError("WAV has no data chunk");
}

AudioClip ReadWav(const std::filesystem::path& path) {
  try {
    return DecodeWav(ReadFileBytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace osvc
