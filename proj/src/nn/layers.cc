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

#include "osvc/nn/layers.h"

#include <string>

#include "osvc/errors.h"

namespace osvc::nn {

namespace {

void RequirePositive(int v, const char* what) {
  if (v <= 0) {
    throw InvalidArgument(std::string(what) + " must be positive, got " +
                          std::to_string(v));
  }
}

void CheckWidth(const Graph& g, Var x, int expected, const char* layer) {
  if (g.value(x).cols() != expected) {
    throw InvalidArgument(std::string(layer) + ": expected input width " +
                          std::to_string(expected) + ", got " +
                          std::to_string(g.value(x).cols()));
  }
}

}  // namespace

void PrenetSpec::Validate() const {
  RequirePositive(input_dim, "prenet input_dim");
  if (widths.empty()) throw InvalidArgument("prenet needs at least one layer");
  for (int w : widths) RequirePositive(w, "prenet width");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw InvalidArgument("prenet dropout must be in [0, 1)");
  }
}

void CbhgSpec::Validate() const {
  RequirePositive(input_dim, "cbhg input_dim");
  RequirePositive(bank_size, "cbhg bank_size");
  RequirePositive(bank_channels, "cbhg bank_channels");
  RequirePositive(proj_channels, "cbhg proj_channels");
  RequirePositive(highway_width, "cbhg highway_width");
  RequirePositive(highway_layers, "cbhg highway_layers");
  RequirePositive(gru_hidden, "cbhg gru_hidden");
}

void PostnetSpec::Validate() const {
  RequirePositive(dim, "postnet dim");
  RequirePositive(channels, "postnet channels");
  RequirePositive(layers, "postnet layers");
  RequirePositive(kernel, "postnet kernel");
}

void RefEncoderSpec::Validate() const {
  RequirePositive(input_dim, "reference encoder input_dim");
  if (channels.empty()) {
    throw InvalidArgument("reference encoder needs conv layers");
  }
  for (int c : channels) RequirePositive(c, "reference encoder channels");
  RequirePositive(gru_hidden, "reference encoder gru_hidden");
}

void to_json(nlohmann::json& j, const PrenetSpec& s) {
  j = {
      {"input_dim", s.input_dim}, {"widths", s.widths}, {"dropout", s.dropout}};
}
void from_json(const nlohmann::json& j, PrenetSpec& s) {
  s.input_dim = j.value("input_dim", s.input_dim);
  s.widths = j.value("widths", s.widths);
  s.dropout = j.value("dropout", s.dropout);
}
void to_json(nlohmann::json& j, const CbhgSpec& s) {
  j = {{"input_dim", s.input_dim},         {"bank_size", s.bank_size},
       {"bank_channels", s.bank_channels}, {"proj_channels", s.proj_channels},
       {"highway_width", s.highway_width}, {"highway_layers", s.highway_layers},
       {"gru_hidden", s.gru_hidden}};
}
void from_json(const nlohmann::json& j, CbhgSpec& s) {
  s.input_dim = j.value("input_dim", s.input_dim);
  s.bank_size = j.value("bank_size", s.bank_size);
  s.bank_channels = j.value("bank_channels", s.bank_channels);
  s.proj_channels = j.value("proj_channels", s.proj_channels);
  s.highway_width = j.value("highway_width", s.highway_width);
  s.highway_layers = j.value("highway_layers", s.highway_layers);
  s.gru_hidden = j.value("gru_hidden", s.gru_hidden);
}
void to_json(nlohmann::json& j, const PostnetSpec& s) {
  j = {{"dim", s.dim},
       {"channels", s.channels},
       {"layers", s.layers},
       {"kernel", s.kernel}};
}
void from_json(const nlohmann::json& j, PostnetSpec& s) {
  s.dim = j.value("dim", s.dim);
  s.channels = j.value("channels", s.channels);
  s.layers = j.value("layers", s.layers);
  s.kernel = j.value("kernel", s.kernel);
}
void to_json(nlohmann::json& j, const RefEncoderSpec& s) {
  j = {{"input_dim", s.input_dim},
       {"channels", s.channels},
       {"gru_hidden", s.gru_hidden}};
}
void from_json(const nlohmann::json& j, RefEncoderSpec& s) {
  s.input_dim = j.value("input_dim", s.input_dim);
  s.channels = j.value("channels", s.channels);
  s.gru_hidden = j.value("gru_hidden", s.gru_hidden);
}

Linear::Linear(ParameterSet* params, const std::string& prefix, int in, int out,
               double weight_scale)
    : in_(in), out_(out) {
  weight_ =
      params->Create(prefix + ".weight", in, out, Init::kFanIn, weight_scale);
  bias_ = params->Create(prefix + ".bias", 1, out, Init::kZero);
}

Var Linear::Forward(Graph* g, Var x) const {
  return g->Affine(x, g->Param(weight_), g->Param(bias_));
}

Conv1d::Conv1d(ParameterSet* params, const std::string& prefix, int in, int out,
               int kernel)
    : kernel_(kernel) {
  weight_ = params->Create(prefix + ".weight", kernel * in, out, Init::kFanIn);
  bias_ = params->Create(prefix + ".bias", 1, out, Init::kZero);
}

Var Conv1d::Forward(Graph* g, Var x, int batch) const {
  return g->Conv1d(x, g->Param(weight_), g->Param(bias_), kernel_, batch);
}

Gru::Gru(ParameterSet* params, const std::string& prefix, int in, int hidden)
    : hidden_(hidden) {
  w_ih_ = params->Create(prefix + ".w_ih", in, 3 * hidden, Init::kRecurrent);
  b_ih_ = params->Create(prefix + ".b_ih", 1, 3 * hidden, Init::kRecurrent);
  w_hh_ =
      params->Create(prefix + ".w_hh", hidden, 3 * hidden, Init::kRecurrent);
  b_hh_ = params->Create(prefix + ".b_hh", 1, 3 * hidden, Init::kRecurrent);
}

Var Gru::Forward(Graph* g, Var x, int batch, bool reverse) const {
  Var gx = g->Affine(x, g->Param(w_ih_), g->Param(b_ih_));
  return g->Gru(gx, g->Param(w_hh_), g->Param(b_hh_), batch, reverse);
}

Prenet::Prenet(ParameterSet* params, const std::string& prefix,
               const PrenetSpec& spec)
    : spec_(spec) {
  spec.Validate();
  int in = spec.input_dim;
  for (size_t i = 0; i < spec.widths.size(); ++i) {
    layers_.emplace_back(params, prefix + "." + std::to_string(i), in,
                         spec.widths[i]);
    in = spec.widths[i];
  }
}

Var Prenet::Forward(Graph* g, Var x) const {
  CheckWidth(*g, x, spec_.input_dim, "prenet");
  for (const auto& layer : layers_) {
    x = g->Dropout(g->Relu(layer.Forward(g, x)), spec_.dropout);
  }
  return x;
}

Cbhg::Cbhg(ParameterSet* params, const std::string& prefix,
           const CbhgSpec& spec)
    : spec_(spec) {
  spec.Validate();
  for (int k = 1; k <= spec.bank_size; ++k) {
    bank_.emplace_back(params, prefix + ".bank." + std::to_string(k),
                       spec.input_dim, spec.bank_channels, k);
  }
  proj0_ = Conv1d(params, prefix + ".proj.0",
                  spec.bank_size * spec.bank_channels, spec.proj_channels, 3);
  proj1_ =
      Conv1d(params, prefix + ".proj.1", spec.proj_channels, spec.input_dim, 3);
  has_pre_highway_ = spec.highway_width != spec.input_dim;
  if (has_pre_highway_) {
    pre_highway_ = Linear(params, prefix + ".pre_highway", spec.input_dim,
                          spec.highway_width);
  }
  const int w = spec.highway_width;
  for (int i = 0; i < spec.highway_layers; ++i) {
    const std::string name = prefix + ".highway." + std::to_string(i);
    highway_.emplace_back(params, name, w, 2 * w);
    // Gate bias starts negative so each layer initially carries its input.
    params->Get(name + ".bias")->value.rightCols(w).setConstant(-1.0);
  }
  gru_fwd_ = Gru(params, prefix + ".bigru.fwd", w, spec.gru_hidden);
  gru_bwd_ = Gru(params, prefix + ".bigru.bwd", w, spec.gru_hidden);
}

Var Cbhg::ForwardToHighway(Graph* g, Var x, int batch) const {
  CheckWidth(*g, x, spec_.input_dim, "cbhg");
  std::vector<Var> bank;
  bank.reserve(bank_.size());
  for (const auto& conv : bank_)
    bank.push_back(g->Relu(conv.Forward(g, x, batch)));
  Var y = g->MaxPool1d(g->ConcatCols(bank), batch);
  y = g->Relu(proj0_.Forward(g, y, batch));
  y = g->Add(proj1_.Forward(g, y, batch), x);
  if (has_pre_highway_) y = pre_highway_.Forward(g, y);
  return y;
}

Var Cbhg::ForwardFromHighway(Graph* g, Var h, int batch) const {
  const int w = spec_.highway_width;
  CheckWidth(*g, h, w, "cbhg highway");
  for (const auto& layer : highway_) {
    Var ht = layer.Forward(g, h);
    Var hh = g->Relu(g->SliceCols(ht, 0, w));
    Var t = g->Sigmoid(g->SliceCols(ht, w, w));
    h = g->Add(g->Mul(t, hh), g->Mul(g->OneMinus(t), h));
  }
  Var fwd = gru_fwd_.Forward(g, h, batch, false);
  Var bwd = gru_bwd_.Forward(g, h, batch, true);
  return g->ConcatCols({fwd, bwd});
}

Var Cbhg::Forward(Graph* g, Var x, int batch) const {
  return ForwardFromHighway(g, ForwardToHighway(g, x, batch), batch);
}

Postnet::Postnet(ParameterSet* params, const std::string& prefix,
                 const PostnetSpec& spec)
    : spec_(spec) {
  spec.Validate();
  int in = spec.dim;
  for (int i = 0; i < spec.layers; ++i) {
    convs_.emplace_back(params, prefix + "." + std::to_string(i), in,
                        spec.channels, spec.kernel);
    in = spec.channels;
  }
  out_ = Linear(params, prefix + ".out", in, spec.dim, 0.1);
}

Var Postnet::Forward(Graph* g, Var x, int batch) const {
  CheckWidth(*g, x, spec_.dim, "postnet");
  for (const auto& conv : convs_) x = g->Tanh(conv.Forward(g, x, batch));
  return out_.Forward(g, x);
}

ReferenceEncoder::ReferenceEncoder(ParameterSet* params,
                                   const std::string& prefix,
                                   const RefEncoderSpec& spec)
    : spec_(spec) {
  spec.Validate();
  int cin = 1;
  int freq = spec.input_dim;
  for (size_t i = 0; i < spec.channels.size(); ++i) {
    const std::string name = prefix + ".conv." + std::to_string(i);
    conv_w_.push_back(params->Create(name + ".weight", 9 * cin,
                                     spec.channels[i], Init::kFanIn));
    conv_b_.push_back(
        params->Create(name + ".bias", 1, spec.channels[i], Init::kZero));
    cin = spec.channels[i];
    freq = (freq + 1) / 2;
  }
  gru_ = Gru(params, prefix + ".gru", freq * cin, spec.gru_hidden);
}

Var ReferenceEncoder::Forward(Graph* g, Var x, int batch) const {
  const Matrix& xv = g->value(x);
  if (xv.rows() == 0 || batch <= 0) {
    throw InvalidArgument("reference encoder: empty input");
  }
  CheckWidth(*g, x, spec_.input_dim, "reference encoder");
  if (xv.rows() % batch != 0) {
    throw InvalidArgument("reference encoder: rows not divisible by batch");
  }
  MapShape shape;
  shape.time = static_cast<int>(xv.rows() / batch);
  shape.batch = batch;
  shape.freq = spec_.input_dim;
  shape.channels = 1;
  // (t, b) x F rows are already (t, b, f) x 1 in row-major memory.
  Var m = g->Reshape(x, shape.rows(), 1);
  for (size_t i = 0; i < conv_w_.size(); ++i) {
    MapShape next;
    m = g->Relu(
        g->Conv2d(m, g->Param(conv_w_[i]), g->Param(conv_b_[i]), shape, &next));
    shape = next;
  }
  Var seq = g->Reshape(m, shape.time * batch, shape.freq * shape.channels);
  Var states = gru_.Forward(g, seq, batch, false);
  return g->SliceRows(states, (shape.time - 1) * batch, batch);
}

}  // namespace osvc::nn
