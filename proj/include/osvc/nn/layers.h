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

#ifndef OSVC_NN_LAYERS_H_
#define OSVC_NN_LAYERS_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "osvc/nn/graph.h"
#include "osvc/nn/parameters.h"

namespace osvc::nn {

struct PrenetSpec {
  int input_dim = 80;
  std::vector<int> widths = {80, 256};
  double dropout = 0.0;

  int output_dim() const { return widths.back(); }
  void Validate() const;
};

struct CbhgSpec {
  int input_dim = 256;
  int bank_size = 8;  // kernels 1..bank_size
  int bank_channels = 128;
  int proj_channels = 256;
  int highway_width = 128;
  int highway_layers = 4;
  int gru_hidden = 128;

  int output_dim() const { return 2 * gru_hidden; }
  void Validate() const;
};

struct PostnetSpec {
  int dim = 80;
  int channels = 256;
  int layers = 4;
  int kernel = 3;

  void Validate() const;
};

struct RefEncoderSpec {
  int input_dim = 80;
  std::vector<int> channels = {32, 32, 64, 64, 128, 128};
  int gru_hidden = 128;

  int output_dim() const { return gru_hidden; }
  void Validate() const;
};

void to_json(nlohmann::json& j, const PrenetSpec& s);
void from_json(const nlohmann::json& j, PrenetSpec& s);
void to_json(nlohmann::json& j, const CbhgSpec& s);
void from_json(const nlohmann::json& j, CbhgSpec& s);
void to_json(nlohmann::json& j, const PostnetSpec& s);
void from_json(const nlohmann::json& j, PostnetSpec& s);
void to_json(nlohmann::json& j, const RefEncoderSpec& s);
void from_json(const nlohmann::json& j, RefEncoderSpec& s);

// Layers hold non-owning pointers into a ParameterSet; parameter names are
// `prefix` + "." + local name.

class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet* params, const std::string& prefix, int in, int out,
         double weight_scale = 1.0);
  Var Forward(Graph* g, Var x) const;
  int in() const { return in_; }
  int out() const { return out_; }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  int in_ = 0;
  int out_ = 0;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterSet* params, const std::string& prefix, int in, int out,
         int kernel);
  Var Forward(Graph* g, Var x, int batch) const;

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  int kernel_ = 1;
};

class Gru {
 public:
  Gru() = default;
  Gru(ParameterSet* params, const std::string& prefix, int in, int hidden);
  // All hidden states, (T * B) x hidden.
  Var Forward(Graph* g, Var x, int batch, bool reverse = false) const;
  int hidden() const { return hidden_; }

 private:
  Parameter* w_ih_ = nullptr;
  Parameter* b_ih_ = nullptr;
  Parameter* w_hh_ = nullptr;
  Parameter* b_hh_ = nullptr;
  int hidden_ = 0;
};

// Affine + ReLU (+ dropout while training) per layer.
class Prenet {
 public:
  Prenet() = default;
  Prenet(ParameterSet* params, const std::string& prefix,
         const PrenetSpec& spec);
  Var Forward(Graph* g, Var x) const;
  const PrenetSpec& spec() const { return spec_; }

 private:
  PrenetSpec spec_;
  std::vector<Linear> layers_;
};

// Conv bank -> max-pool -> projections with residual -> highway stack ->
// bidirectional GRU. Parameter groups: bank, proj, pre_highway, highway,
// bigru.
class Cbhg {
 public:
  Cbhg() = default;
  Cbhg(ParameterSet* params, const std::string& prefix, const CbhgSpec& spec);

  Var Forward(Graph* g, Var x, int batch) const;
  // Split at the highway stack input, so callers can cache the first half
  // when only the highway stack and GRU are trained.
  Var ForwardToHighway(Graph* g, Var x, int batch) const;
  Var ForwardFromHighway(Graph* g, Var h, int batch) const;

  const CbhgSpec& spec() const { return spec_; }

 private:
  CbhgSpec spec_;
  std::vector<Conv1d> bank_;
  Conv1d proj0_;
  Conv1d proj1_;
  bool has_pre_highway_ = false;
  Linear pre_highway_;
  std::vector<Linear> highway_;
  Gru gru_fwd_;
  Gru gru_bwd_;
};

// Tanh conv layers followed by a linear projection back to `dim`. Returns
// the residual; callers add it to their input.
class Postnet {
 public:
  Postnet() = default;
  Postnet(ParameterSet* params, const std::string& prefix,
          const PostnetSpec& spec);
  Var Forward(Graph* g, Var x, int batch) const;

 private:
  PostnetSpec spec_;
  std::vector<Conv1d> convs_;
  Linear out_;
};

// Strided 3x3 conv stack over the (time, feature) map, then a GRU whose
// final state is the embedding: (T * B) x input_dim -> B x gru_hidden.
class ReferenceEncoder {
 public:
  ReferenceEncoder() = default;
  ReferenceEncoder(ParameterSet* params, const std::string& prefix,
                   const RefEncoderSpec& spec);
  Var Forward(Graph* g, Var x, int batch) const;
  const RefEncoderSpec& spec() const { return spec_; }

 private:
  RefEncoderSpec spec_;
  std::vector<Parameter*> conv_w_;
  std::vector<Parameter*> conv_b_;
  Gru gru_;
};

}  // namespace osvc::nn

#endif  // OSVC_NN_LAYERS_H_
