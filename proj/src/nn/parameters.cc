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

#include "osvc/nn/parameters.h"

#include <cmath>
#include <cstring>
#include <random>

#include "osvc/errors.h"
#include "osvc/file_util.h"
#include "osvc/random.h"
#include "osvc/tensor_file.h"

namespace osvc::nn {

namespace {

std::string TensorBytes(const Matrix& m) {
  std::string bytes(static_cast<size_t>(m.size()) * sizeof(double), '\0');
  std::memcpy(bytes.data(), m.data(), bytes.size());
  return bytes;
}

}  // namespace

bool MatchesAnyPrefix(const std::string& name,
                      const std::vector<std::string>& prefixes) {
  for (const auto& p : prefixes) {
    if (name.compare(0, p.size(), p) == 0) return true;
  }
  return false;
}

Parameter* ParameterSet::Create(const std::string& name, int rows, int cols,
                                Init init, double scale) {
  if (rows <= 0 || cols <= 0) {
    throw InvalidArgument("parameter " + name + " needs a positive shape");
  }
  if (params_.count(name)) {
    throw InvalidArgument("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value.resize(rows, cols);
  std::mt19937_64 rng(Mix(seed_, HashString(name)));
  double bound = 0.0;
  switch (init) {
    case Init::kZero:
      p->value.setZero();
      break;
    case Init::kOne:
      p->value.setOnes();
      break;
    case Init::kFanIn:
      bound = 1.0 / std::sqrt(static_cast<double>(rows));
      break;
    case Init::kRecurrent:
      bound = 1.0 / std::sqrt(std::max(1.0, cols / 3.0));
      break;
  }
  if (bound > 0.0) {
    for (int64_t i = 0; i < p->value.size(); ++i) {
      p->value.data()[i] = (2.0 * Uniform(rng) - 1.0) * bound;
    }
  }
  p->value *= scale;
  p->ZeroGrad();
  Parameter* raw = p.get();
  params_[name] = std::move(p);
  return raw;
}

Parameter* ParameterSet::Find(const std::string& name) const {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : it->second.get();
}

Parameter* ParameterSet::Get(const std::string& name) const {
  Parameter* p = Find(name);
  if (p == nullptr) throw InvalidArgument("unknown parameter: " + name);
  return p;
}

std::vector<std::string> ParameterSet::Names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

std::vector<std::string> ParameterSet::Matching(
    const std::vector<std::string>& prefixes) const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) {
    if (MatchesAnyPrefix(name, prefixes)) out.push_back(name);
  }
  return out;
}

std::vector<Parameter*> ParameterSet::All() const {
  std::vector<Parameter*> out;
  for (const auto& [name, p] : params_) out.push_back(p.get());
  return out;
}

int64_t ParameterSet::NumElements() const {
  int64_t n = 0;
  for (const auto& [name, p] : params_) n += p->value.size();
  return n;
}

void ParameterSet::ZeroGrad() {
  for (auto& [name, p] : params_) p->ZeroGrad();
}

void ParameterSet::SetTrainableOnly(const std::vector<std::string>& prefixes) {
  for (auto& [name, p] : params_)
    p->trainable = MatchesAnyPrefix(name, prefixes);
}

void ParameterSet::SetAllTrainable(bool trainable) {
  for (auto& [name, p] : params_) p->trainable = trainable;
}

void ParameterSet::CopyValuesFrom(const ParameterSet& other) {
  for (auto& [name, p] : params_) {
    const Parameter* src = other.Find(name);
    if (src == nullptr) continue;
    if (src->value.rows() != p->value.rows() ||
        src->value.cols() != p->value.cols()) {
      throw InvalidArgument("shape mismatch copying " + name);
    }
    p->value = src->value;
  }
}

std::string ParameterSet::Checksum(const std::string& name) const {
  return Sha256Hex(TensorBytes(Get(name)->value));
}

std::string ParameterSet::Checksum() const {
  std::string all;
  for (const auto& [name, p] : params_) {
    all += name;
    all.push_back('\0');
    all += TensorBytes(p->value);
  }
  return Sha256Hex(all);
}

void ParameterSet::Save(const std::filesystem::path& dir) const {
  for (const auto& [name, p] : params_) {
    WriteTensorFile(dir / (name + ".tensor"),
                    MatrixRecord(name, p->value, DType::kFloat64, 0.0));
  }
}

void ParameterSet::Load(const std::filesystem::path& dir) {
  for (auto& [name, p] : params_) {
    const auto path = dir / (name + ".tensor");
    if (!std::filesystem::exists(path)) {
      throw DataError("checkpoint " + dir.string() + " lacks tensor " + name);
    }
    Matrix m = RecordToMatrix(ReadTensorFile(path));
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw DataError("checkpoint tensor " + name + " has shape " +
                      std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " +
                      std::to_string(p->value.rows()) + "x" +
                      std::to_string(p->value.cols()));
    }
    p->value = std::move(m);
  }
}

}  // namespace osvc::nn
