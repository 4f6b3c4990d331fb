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

#include "run_record.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <utility>

#include "osvc/file_util.h"

namespace osvc {

namespace fs = std::filesystem;

namespace {

std::string UtcNow() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json Entry(const fs::path& path) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) {
    return {{"path", path.string()},
            {"git_hash", GitBlobHash(ReadFileBytes(path))}};
  }
  if (fs::is_directory(path, ec)) {
    // Hash of the sorted (relative path, blob hash) list.
    std::vector<std::string> lines;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (!e.is_regular_file()) continue;
      lines.push_back(fs::relative(e.path(), path).string() + " " +
                      GitBlobHash(ReadFileBytes(e.path())));
    }
    std::sort(lines.begin(), lines.end());
    std::string joined;
    for (const std::string& l : lines) joined += l + "\n";
    return {{"path", path.string()}, {"git_hash", GitBlobHash(joined)}};
  }
  return {{"path", path.string()}, {"git_hash", nullptr}};
}

}  // namespace

RunRecord::RunRecord(std::string command, std::string config_hash)
    : command_(std::move(command)),
      config_hash_(std::move(config_hash)),
      started_(UtcNow()) {}

void RunRecord::AddInput(const fs::path& path) {
  inputs_.push_back(Entry(path));
}

void RunRecord::AddOutput(const fs::path& path) {
  outputs_.push_back(Entry(path));
}

void RunRecord::AddWarning(const std::string& message) {
  warnings_.push_back(message);
}

void RunRecord::Set(const std::string& key, nlohmann::json value) {
  extra_[key] = std::move(value);
}

nlohmann::json RunRecord::Stable() const {
  return {{"command", command_},   {"config_hash", config_hash_},
          {"inputs", inputs_},     {"outputs", outputs_},
          {"warnings", warnings_}, {"extra", extra_}};
}

std::string RunRecord::Hash() const { return Sha256Hex(Stable().dump()); }

nlohmann::json RunRecord::ToJson() const {
  nlohmann::json j = Stable();
  j["record_hash"] = Hash();
  j["started"] = started_;
  j["finished"] = UtcNow();
  return j;
}

void RunRecord::Write(const fs::path& path) const {
  WriteFileAtomic(path, ToJson().dump(2) + "\n");
}

}  // namespace osvc
