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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "osvc/errors.h"
#include "osvc/nn/gradcheck.h"
#include "osvc/nn/graph.h"
#include "osvc/nn/layers.h"
#include "osvc/nn/optimizer.h"
#include "osvc/nn/parameters.h"
#include "osvc/random.h"
#include "test_util.h"

namespace osvc::nn {
namespace {

Matrix RandomMatrix(int rows, int cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Normal(rng);
  return m;
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double WorstError(ParameterSet* ps, const std::function<double(bool)>& loss,
                  int probes = 60) {
  double worst = 0.0;
  for (const GradProbe& p : ProbeGradients(ps, loss, probes, 17, 1e-6)) {
    worst = std::max(worst, p.rel_error);
  }
  return worst;
}

TEST(GraphTest, ElementwiseOpsGradients) {
  ParameterSet ps(1);
  Parameter* a = ps.Create("a", 4, 3, Init::kFanIn, 2.0);
  Parameter* b = ps.Create("b", 4, 3, Init::kFanIn, 2.0);
  Parameter* w = ps.Create("w", 3, 5, Init::kFanIn);
  Parameter* bias = ps.Create("bias", 1, 5, Init::kFanIn);
  const Matrix target = RandomMatrix(4, 5, 2);
  auto loss = [&](bool backward) {
    Graph g;
    Var va = g.Param(a), vb = g.Param(b);
    Var m = g.Add(g.Mul(g.Sigmoid(va), g.Tanh(vb)), g.Relu(g.Sub(va, vb)));
    Var y = g.Affine(g.AffineScalar(m, 1.5, -0.2), g.Param(w), g.Param(bias));
    Var l = g.Add(g.L1Loss(y, target), g.Scale(g.Sum(g.OneMinus(y)), 0.01));
    if (backward) g.Backward(l);
    return g.value(l)(0, 0);
  };
  EXPECT_LT(WorstError(&ps, loss), 1e-4);
}

TEST(GraphTest, StructuralOpsGradients) {
  ParameterSet ps(2);
  Parameter* x = ps.Create("x", 6, 4, Init::kFanIn, 3.0);  // T=3, B=2
  Parameter* e = ps.Create("e", 2, 2, Init::kFanIn, 3.0);
  const std::vector<int> labels = {0, 1, 2, 1, 0, 2};
  auto loss = [&](bool backward) {
    Graph g;
    Var vx = g.Param(x);
    Var cat =
        g.ConcatCols({g.SliceCols(vx, 1, 2), g.BroadcastSteps(g.Param(e), 3)});
    Var r = g.Reshape(cat, 12, 2);
    Var back = g.Reshape(r, 6, 4);
    Var logits = g.SliceCols(g.Add(back, vx), 0, 3);
    Var mean = g.MeanOverTime(g.SliceRows(back, 0, 4), 2);
    Var l = g.Add(g.CrossEntropy(logits, labels), g.Sum(g.Tanh(mean)));
    if (backward) g.Backward(l);
    return g.value(l)(0, 0);
  };
  EXPECT_LT(WorstError(&ps, loss), 1e-4);
}

TEST(GraphTest, SequenceOpsGradients) {
  ParameterSet ps(3);
  const int T = 5, B = 2, C = 3;
  Parameter* x = ps.Create("x", T * B, C, Init::kFanIn, 3.0);
  Parameter* cw = ps.Create("cw", 3 * C, 4, Init::kFanIn);
  Parameter* cb = ps.Create("cb", 1, 4, Init::kFanIn);
  Parameter* wih = ps.Create("wih", 4, 6, Init::kFanIn);
  Parameter* whh = ps.Create("whh", 2, 6, Init::kRecurrent);
  Parameter* bhh = ps.Create("bhh", 1, 6, Init::kFanIn);
  const Matrix target = RandomMatrix(T * B, 2, 4);
  for (bool reverse : {false, true}) {
    auto loss = [&](bool backward) {
      Graph g;
      Var c = g.Conv1d(g.Param(x), g.Param(cw), g.Param(cb), 3, B);
      Var p = g.MaxPool1d(g.Tanh(c), B);
      Var h = g.Gru(g.MatMul(p, g.Param(wih)), g.Param(whh), g.Param(bhh), B,
                    reverse);
      Var l = g.L1Loss(h, target);
      if (backward) g.Backward(l);
      return g.value(l)(0, 0);
    };
    EXPECT_LT(WorstError(&ps, loss), 1e-4) << reverse;
  }
}

TEST(GraphTest, Conv2dGradientsAndShape) {
  ParameterSet ps(4);
  const MapShape in{5, 2, 7, 2};  // T, B, F, C
  Parameter* x = ps.Create("x", in.rows(), in.channels, Init::kFanIn, 3.0);
  Parameter* w = ps.Create("w", 9 * 2, 3, Init::kFanIn);
  Parameter* b = ps.Create("b", 1, 3, Init::kFanIn);
  MapShape out;
  auto loss = [&](bool backward) {
    Graph g;
    Var y = g.Conv2d(g.Param(x), g.Param(w), g.Param(b), in, &out);
    Var l = g.Sum(g.Tanh(y));
    if (backward) g.Backward(l);
    return g.value(l)(0, 0);
  };
  EXPECT_LT(WorstError(&ps, loss), 1e-4);
  EXPECT_EQ(out.time, 3);
  EXPECT_EQ(out.batch, 2);
  EXPECT_EQ(out.freq, 4);
  EXPECT_EQ(out.channels, 3);
}

TEST(GraphTest, Conv1dMatchesHandComputation) {
  Graph g;
  Matrix x(4, 1), w(3, 1), b(1, 1);
  x << 1, 2, 3, 4;
  w << 0.5, -1, 2;  // taps for t-1, t, t+1
  b << 0.25;
  const Matrix y =
      g.value(g.Conv1d(g.Constant(x), g.Constant(w), g.Constant(b), 3, 1));
  const double expect[] = {-1 + 4 + 0.25, 0.5 - 2 + 6 + 0.25, 1 - 3 + 8 + 0.25,
                           1.5 - 4 + 0.25};
  for (int t = 0; t < 4; ++t) EXPECT_DOUBLE_EQ(y(t, 0), expect[t]);
}

TEST(GraphTest, MaxPoolKeepsLength) {
  Graph g;
  Matrix x(3, 1);
  x << 1, 3, 2;
  const Matrix y = g.value(g.MaxPool1d(g.Constant(x), 1));
  EXPECT_EQ(y(0, 0), 3);
  EXPECT_EQ(y(1, 0), 3);
  EXPECT_EQ(y(2, 0), 2);
}

TEST(GraphTest, GruMatchesHandComputation) {
  // One unit, two steps; gates ordered (reset, update, new).
  Matrix gx(2, 3), whh(1, 3), bhh(1, 3);
  gx << 0.3, -0.2, 0.5, -0.4, 0.1, 0.2;
  whh << 0.7, -0.6, 0.9;
  bhh << 0.05, 0.1, -0.15;
  Graph g;
  const Matrix h = g.value(
      g.Gru(g.Constant(gx), g.Constant(whh), g.Constant(bhh), 1, false));
  double prev = 0.0;
  for (int t = 0; t < 2; ++t) {
    const double r = Sigmoid(gx(t, 0) + prev * whh(0, 0) + bhh(0, 0));
    const double z = Sigmoid(gx(t, 1) + prev * whh(0, 1) + bhh(0, 1));
    const double n = std::tanh(gx(t, 2) + r * (prev * whh(0, 2) + bhh(0, 2)));
    prev = (1.0 - z) * n + z * prev;
    EXPECT_NEAR(h(t, 0), prev, 1e-15) << t;
  }
}

TEST(GraphTest, ShapeMismatchThrows) {
  Graph g;
  Var a = g.Constant(Matrix::Ones(2, 3));
  Var b = g.Constant(Matrix::Ones(3, 2));
  EXPECT_THROW(g.Add(a, b), InvalidArgument);
  EXPECT_THROW(g.MatMul(a, a), InvalidArgument);
  EXPECT_THROW(g.L1Loss(a, Matrix::Ones(1, 1)), InvalidArgument);
  EXPECT_THROW(g.Backward(a), InvalidArgument);
}

TEST(GraphTest, DropoutOnlyWhenTraining) {
  const Matrix x = Matrix::Ones(50, 10);
  Graph eval_graph(false);
  EXPECT_EQ(eval_graph.value(eval_graph.Dropout(eval_graph.Constant(x), 0.5)),
            x);
  Graph train_graph(true, 5);
  const Matrix y =
      train_graph.value(train_graph.Dropout(train_graph.Constant(x), 0.5));
  int zeros = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    EXPECT_TRUE(y.data()[i] == 0.0 || y.data()[i] == 2.0);
    zeros += y.data()[i] == 0.0;
  }
  EXPECT_GT(zeros, 150);
  EXPECT_LT(zeros, 350);
}

TEST(PrenetTest, PaperWidths) {
  ParameterSet ps(1);
  PrenetSpec spec;
  spec.input_dim = 64;
  Prenet prenet(&ps, "pre", spec);
  Graph g;
  const Matrix y =
      g.value(prenet.Forward(&g, g.Constant(RandomMatrix(81, 64, 1))));
  EXPECT_EQ(y.rows(), 81);
  EXPECT_EQ(y.cols(), 256);
  EXPECT_THROW(prenet.Forward(&g, g.Constant(Matrix::Ones(3, 5))),
               InvalidArgument);
}

TEST(PrenetTest, ZeroWeightsGiveZero) {
  ParameterSet ps(1);
  PrenetSpec spec;
  spec.input_dim = 10;
  Prenet prenet(&ps, "pre", spec);
  for (Parameter* p : ps.All()) p->value.setZero();
  Graph g;
  EXPECT_EQ(g.value(prenet.Forward(&g, g.Constant(RandomMatrix(7, 10, 2))))
                .cwiseAbs()
                .maxCoeff(),
            0.0);
}

TEST(PrenetTest, ItemsAreIndependent) {
  // Time-major batch of two identical sequences.
  ParameterSet ps(2);
  CbhgSpec spec{8, 3, 4, 6, 5, 2, 3};
  Cbhg cbhg(&ps, "cbhg", spec);
  const Matrix seq = RandomMatrix(6, 8, 3);
  Matrix both(12, 8);
  for (int t = 0; t < 6; ++t) {
    both.row(2 * t) = seq.row(t);
    both.row(2 * t + 1) = seq.row(t);
  }
  Graph g;
  const Matrix y = g.value(cbhg.Forward(&g, g.Constant(both), 2));
  for (int t = 0; t < 6; ++t) EXPECT_EQ(y.row(2 * t), y.row(2 * t + 1));
}

TEST(CbhgTest, PaperShapes) {
  ParameterSet ps(3);
  Cbhg cbhg(&ps, "cbhg", CbhgSpec{});
  Graph g;
  const Matrix y =
      g.value(cbhg.Forward(&g, g.Constant(RandomMatrix(81, 256, 4)), 1));
  EXPECT_EQ(y.rows(), 81);
  EXPECT_EQ(y.cols(), 256);
  const Matrix one =
      g.value(cbhg.Forward(&g, g.Constant(RandomMatrix(1, 256, 5)), 1));
  EXPECT_EQ(one.rows(), 1);
  EXPECT_EQ(one.cols(), 256);
  EXPECT_THROW(cbhg.Forward(&g, g.Constant(Matrix::Ones(4, 80)), 1),
               InvalidArgument);
}

TEST(CbhgTest, NotReversalSymmetric) {
  ParameterSet ps(4);
  Cbhg cbhg(&ps, "cbhg", CbhgSpec{8, 3, 4, 6, 5, 2, 3});
  const Matrix x = RandomMatrix(9, 8, 6);
  const Matrix xr = x.colwise().reverse();
  Graph g;
  const Matrix y = g.value(cbhg.Forward(&g, g.Constant(x), 1));
  const Matrix yr = g.value(cbhg.Forward(&g, g.Constant(xr), 1));
  EXPECT_GT((Matrix(yr.colwise().reverse()) - y).norm(), 1e-6);
}

TEST(CbhgTest, SplitMatchesWhole) {
  ParameterSet ps(5);
  Cbhg cbhg(&ps, "cbhg", CbhgSpec{8, 3, 4, 6, 5, 2, 3});
  const Matrix x = RandomMatrix(14, 8, 7);
  Graph g;
  const Matrix whole = g.value(cbhg.Forward(&g, g.Constant(x), 2));
  Var h = cbhg.ForwardToHighway(&g, g.Constant(x), 2);
  const Matrix split = g.value(cbhg.ForwardFromHighway(&g, h, 2));
  EXPECT_EQ(whole, split);
}

TEST(PostnetTest, ShapesAndZeroResidual) {
  ParameterSet ps(6);
  Postnet postnet(&ps, "post", PostnetSpec{});
  Graph g;
  const Matrix x = RandomMatrix(81, 80, 8);
  const Matrix r = g.value(postnet.Forward(&g, g.Constant(x), 1));
  EXPECT_EQ(r.rows(), 81);
  EXPECT_EQ(r.cols(), 80);
  EXPECT_GT(r.norm(), 0.0);
  ps.Get("post.out.weight")->value.setZero();
  EXPECT_EQ(g.value(postnet.Forward(&g, g.Constant(x), 1)).norm(), 0.0);
}

TEST(ReferenceEncoderTest, FixedWidthEmbedding) {
  ParameterSet ps(7);
  ReferenceEncoder enc(&ps, "ref", RefEncoderSpec{});
  for (int frames : {1, 100, 200}) {
    Graph g;
    const Matrix x = RandomMatrix(frames, 80, frames);
    const Matrix e = g.value(enc.Forward(&g, g.Constant(x), 1));
    EXPECT_EQ(e.rows(), 1);
    EXPECT_EQ(e.cols(), 128);
    Graph g2;
    EXPECT_EQ(g2.value(enc.Forward(&g2, g2.Constant(x), 1)), e);
  }
  Graph g;
  EXPECT_THROW(enc.Forward(&g, g.Constant(Matrix(0, 80)), 1), InvalidArgument);
}

TEST(LayerGradientTest, AllBlocksAtSmallWidths) {
  ParameterSet ps(8);
  const int B = 2, T = 7;
  Prenet pre(&ps, "pre", PrenetSpec{5, {6, 7}, 0.0});
  Cbhg cbhg(&ps, "cbhg", CbhgSpec{7, 3, 4, 5, 6, 2, 4});
  Postnet post(&ps, "post", PostnetSpec{8, 5, 2, 3});
  ReferenceEncoder ref(&ps, "ref", RefEncoderSpec{5, {2, 3, 4}, 3});
  Linear out(&ps, "out", 8 + 3, 8);
  const Matrix x = RandomMatrix(T * B, 5, 9);
  const Matrix target = RandomMatrix(T * B, 8, 10);
  auto loss = [&](bool backward) {
    Graph g;
    Var xi = g.Constant(x);
    Var h = cbhg.Forward(&g, pre.Forward(&g, xi), B);
    Var e = ref.Forward(&g, xi, B);
    Var m = out.Forward(&g, g.ConcatCols({h, g.BroadcastSteps(e, T)}));
    Var mp = g.Add(m, post.Forward(&g, m, B));
    Var l = g.Add(g.L1Loss(m, target), g.Scale(g.Sum(g.Tanh(mp)), 0.1));
    if (backward) g.Backward(l);
    return g.value(l)(0, 0);
  };
  EXPECT_LT(WorstError(&ps, loss, 200), 1e-3);
}

TEST(ParameterSetTest, InitIsOrderIndependent) {
  ParameterSet a(9), b(9);
  a.Create("x", 3, 3, Init::kFanIn);
  a.Create("y", 2, 2, Init::kFanIn);
  b.Create("y", 2, 2, Init::kFanIn);
  b.Create("x", 3, 3, Init::kFanIn);
  EXPECT_EQ(a.Checksum(), b.Checksum());
  for (double v : std::vector<double>(a.Get("x")->value.data(),
                                      a.Get("x")->value.data() + 9)) {
    EXPECT_LE(std::abs(v), 1.0 / std::sqrt(3.0));
  }
  EXPECT_THROW(a.Create("x", 1, 1, Init::kZero), InvalidArgument);
  EXPECT_THROW(a.Get("nope"), InvalidArgument);
}

TEST(ParameterSetTest, SaveLoadRoundTrip) {
  const auto dir = osvc::testing::TempDir("params");
  ParameterSet a(10), b(11);
  a.Create("m.w", 4, 3, Init::kFanIn);
  b.Create("m.w", 4, 3, Init::kFanIn);
  a.Save(dir);
  EXPECT_NE(a.Checksum(), b.Checksum());
  b.Load(dir);
  EXPECT_EQ(a.Checksum(), b.Checksum());
  ParameterSet c(12);
  c.Create("m.w", 3, 3, Init::kFanIn);
  EXPECT_THROW(c.Load(dir), DataError);
  ParameterSet d(13);
  d.Create("m.other", 3, 3, Init::kFanIn);
  EXPECT_THROW(d.Load(dir), DataError);
}

TEST(ParameterSetTest, TrainableFilter) {
  ParameterSet ps(14);
  ps.Create("a.x", 1, 1, Init::kOne);
  ps.Create("a.y", 1, 1, Init::kOne);
  ps.Create("b.x", 1, 1, Init::kOne);
  ps.SetTrainableOnly({"a."});
  EXPECT_TRUE(ps.Get("a.x")->trainable);
  EXPECT_FALSE(ps.Get("b.x")->trainable);
  EXPECT_EQ(ps.Matching({"a.", "b."}).size(), 3u);
  EXPECT_TRUE(MatchesAnyPrefix("a.y", {"c.", "a."}));
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  ParameterSet ps(15);
  Parameter* p = ps.Create("p", 1, 3, Init::kZero);
  Parameter* frozen = ps.Create("f", 1, 1, Init::kOne);
  frozen->trainable = false;
  ps.ZeroGrad();
  p->grad << 2.0, -0.5, 0.0;
  frozen->grad << 1.0;
  Adam adam;
  adam.Step(&ps, 0.01);
  // Bias-corrected moments equal g and g^2 after one step.
  EXPECT_NEAR(p->value(0, 0), -0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p->value(0, 1), 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(p->value(0, 2), 0.0);
  EXPECT_EQ(frozen->value(0, 0), 1.0);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(AdamTest, MatchesReferenceOverSteps) {
  ParameterSet ps(16);
  Parameter* p = ps.Create("p", 1, 1, Init::kOne);
  Adam adam;
  double m = 0, v = 0, theta = 1.0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2.0 * theta - 0.3;
    ps.ZeroGrad();
    p->grad(0, 0) = g;
    adam.Step(&ps, 0.1);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    theta -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p->value(0, 0), theta, 1e-14) << t;
  }
}

TEST(GradcheckTest, RelativeErrorFloor) {
  EXPECT_NEAR(RelativeError(1.0, 1.001), 0.001 / 1.001, 1e-15);
  EXPECT_DOUBLE_EQ(RelativeError(0.0, 1e-9), 1e-9 / 1e-6);
}

}  // namespace
}  // namespace osvc::nn
