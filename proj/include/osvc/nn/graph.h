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

#ifndef OSVC_NN_GRAPH_H_
#define OSVC_NN_GRAPH_H_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "osvc/nn/parameters.h"
#include "osvc/types.h"

namespace osvc::nn {

// Handle to a node of a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Geometry of a 2-D feature map stored as (time, batch, freq) rows x channels.
struct MapShape {
  int time = 0;
  int batch = 0;
  int freq = 0;
  int channels = 0;
  int rows() const { return time * batch * freq; }
};

// Reverse-mode tape. Sequence batches are time-major: row t * batch + b holds
// frame t of item b, so one time step is a contiguous block of rows.
//
// Ops only record a backward closure when some input requires a gradient;
// parameters that are not trainable enter the tape as constants.
class Graph {
 public:
  explicit Graph(bool training = false, uint64_t seed = 0)
      : training_(training), rng_(seed) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }

  Var Constant(Matrix value);
  Var Param(Parameter* p);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  // Seeds d(loss)/d(loss) = 1 and accumulates into Parameter::grad.
  void Backward(Var loss);

  // x * w (+ b broadcast over rows).
  Var Affine(Var x, Var w, Var b);
  Var MatMul(Var x, Var w) { return Affine(x, w, Var{}); }

  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Scale(Var a, double s);
  // s * a + c elementwise.
  Var AffineScalar(Var a, double s, double c);
  Var OneMinus(Var a) { return AffineScalar(a, -1.0, 1.0); }

  Var Relu(Var a);
  Var Tanh(Var a);
  Var Sigmoid(Var a);
  // Inverted dropout; identity when not training or p == 0.
  Var Dropout(Var a, double p);

  Var ConcatCols(const std::vector<Var>& parts);
  Var SliceCols(Var a, int begin, int count);
  Var SliceRows(Var a, int begin, int count);
  Var Reshape(Var a, int rows, int cols);
  // (batch x E) -> (steps * batch x E), repeating the batch block per step.
  Var BroadcastSteps(Var a, int steps);
  // Mean over the time axis of a time-major sequence: -> batch x C.
  Var MeanOverTime(Var a, int batch);

  // Same-padded 1-D convolution over time. w is (kernel * Cin) x Cout with
  // tap-major rows; left padding (kernel - 1) / 2.
  Var Conv1d(Var x, Var w, Var b, int kernel, int batch);
  // max(x[t], x[t + 1]), last frame passed through; keeps length.
  Var MaxPool1d(Var x, int batch);
  // GRU recurrence over precomputed input gates gx = x W_ih + b_ih, columns
  // ordered (reset, update, new). Returns all hidden states (T * B) x H.
  Var Gru(Var gx, Var w_hh, Var b_hh, int batch, bool reverse);
  // 3x3 convolution, stride 2, padding 1 on both axes; w is (9 * Cin) x Cout.
  Var Conv2d(Var x, Var w, Var b, const MapShape& in, MapShape* out);

  // Mean absolute error against a constant target.
  Var L1Loss(Var pred, const Matrix& target);
  // Mean over rows of -log softmax(logits)[label].
  Var CrossEntropy(Var logits, const std::vector<int>& labels);
  Var Sum(Var a);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void()> backward;
  };

  Var Push(Matrix value, bool requires_grad);
  bool Needs(Var v) const { return nodes_[v.id].requires_grad; }
  Matrix& Grad(Var v);
  // Sets the backward closure of the node just pushed.
  void OnBackward(Var out, std::function<void()> fn);

  bool training_;
  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
};

}  // namespace osvc::nn

#endif  // OSVC_NN_GRAPH_H_
