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

#ifndef OSVC_NN_PARAMETERS_H_
#define OSVC_NN_PARAMETERS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "osvc/types.h"

namespace osvc::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value
  bool trainable = true;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

enum class Init {
  kZero,
  kOne,
  kFanIn,      // U(-1/sqrt(rows), 1/sqrt(rows)); rows is the fan-in
  kRecurrent,  // U(-1/sqrt(cols/3), ...) for GRU matrices
};

// Named tensors, iterated in lexicographic name order. Names encode the
// module path, e.g. "conversion.cbhg.highway.0.weight".
class ParameterSet {
 public:
  explicit ParameterSet(uint64_t seed = 0) : seed_(seed) {}
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  // Initialisation is seeded by (seed, name), so it does not depend on the
  // order in which parameters are created.
  Parameter* Create(const std::string& name, int rows, int cols, Init init,
                    double scale = 1.0);

  Parameter* Get(const std::string& name) const;   // throws if absent
  Parameter* Find(const std::string& name) const;  // nullptr if absent
  bool Contains(const std::string& name) const { return Find(name) != nullptr; }

  std::vector<std::string> Names() const;
  // Names starting with any of `prefixes`.
  std::vector<std::string> Matching(
      const std::vector<std::string>& prefixes) const;
  std::vector<Parameter*> All() const;

  int64_t NumElements() const;
  size_t size() const { return params_.size(); }

  void ZeroGrad();
  // Marks exactly the parameters matching `prefixes` as trainable.
  void SetTrainableOnly(const std::vector<std::string>& prefixes);
  void SetAllTrainable(bool trainable);

  // Copies values (not grads) of every parameter present in both sets.
  void CopyValuesFrom(const ParameterSet& other);

  // SHA-256 of the raw little-endian doubles of one tensor / all tensors.
  std::string Checksum(const std::string& name) const;
  std::string Checksum() const;

  // One float64 tensor file per parameter under `dir`.
  void Save(const std::filesystem::path& dir) const;
  // Loads values for every existing parameter; all must be present on disk
  // with matching shape.
  void Load(const std::filesystem::path& dir);

 private:
  uint64_t seed_;
  std::map<std::string, std::unique_ptr<Parameter>> params_;
};

// Prefix matching helper shared with snapshot filters.
bool MatchesAnyPrefix(const std::string& name,
                      const std::vector<std::string>& prefixes);

}  // namespace osvc::nn

#endif  // OSVC_NN_PARAMETERS_H_
