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

#ifndef OSVC_TOOLS_RUN_RECORD_H_
#define OSVC_TOOLS_RUN_RECORD_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace osvc {

// Provenance of one CLI invocation. `hash` covers everything except the
// timestamps, so identical runs produce identical hashes.
class RunRecord {
 public:
  RunRecord(std::string command, std::string config_hash);

  void AddInput(const std::filesystem::path& path);
  void AddOutput(const std::filesystem::path& path);
  void AddWarning(const std::string& message);
  void Set(const std::string& key, nlohmann::json value);

  std::string Hash() const;
  nlohmann::json ToJson() const;
  // Atomic write of the JSON record.
  void Write(const std::filesystem::path& path) const;

 private:
  nlohmann::json Stable() const;

  std::string command_;
  std::string config_hash_;
  std::string started_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json warnings_ = nlohmann::json::array();
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace osvc

#endif  // OSVC_TOOLS_RUN_RECORD_H_
