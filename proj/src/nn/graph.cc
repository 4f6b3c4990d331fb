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

#include "osvc/nn/graph.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "osvc/errors.h"
#include "osvc/random.h"

namespace osvc::nn {

namespace {

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(
        std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()));
  }
}

}  // namespace

Var Graph::Push(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Graph::Grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::OnBackward(Var out, std::function<void()> fn) {
  if (nodes_[out.id].requires_grad) nodes_[out.id].backward = std::move(fn);
}

Var Graph::Constant(Matrix value) { return Push(std::move(value), false); }

Var Graph::Param(Parameter* p) {
  Var out = Push(p->value, p->trainable);
  nodes_[out.id].param = p;
  OnBackward(out, [this, out] {
    Node& n = nodes_[out.id];
    if (n.param->grad.size() == 0) n.param->ZeroGrad();
    n.param->grad += n.grad;
  });
  return out;
}

void Graph::Backward(Var loss) {
  if (value(loss).size() != 1) {
    throw InvalidArgument("Backward needs a scalar loss");
  }
  if (!Needs(loss)) return;
  Grad(loss)(0, 0) += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.grad.size() != 0 && n.backward) n.backward();
  }
}

Var Graph::Affine(Var x, Var w, Var b) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  if (xv.cols() != wv.rows()) {
    throw InvalidArgument("Affine: input width " + std::to_string(xv.cols()) +
                          " does not match weight rows " +
                          std::to_string(wv.rows()));
  }
  Matrix y(xv.rows(), wv.cols());
  y.noalias() = xv * wv;
  bool rg = Needs(x) || Needs(w);
  if (b.valid()) {
    if (value(b).rows() != 1 || value(b).cols() != wv.cols()) {
      throw InvalidArgument("Affine: bias shape mismatch");
    }
    y.rowwise() += value(b).row(0);
    rg = rg || Needs(b);
  }
  Var out = Push(std::move(y), rg);
  OnBackward(out, [this, x, w, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    if (Needs(x)) Grad(x).noalias() += g * value(w).transpose();
    if (Needs(w)) Grad(w).noalias() += value(x).transpose() * g;
    if (b.valid() && Needs(b)) Grad(b) += g.colwise().sum();
  });
  return out;
}

Var Graph::Add(Var a, Var b) {
  CheckSameShape(value(a), value(b), "Add");
  Var out = Push(value(a) + value(b), Needs(a) || Needs(b));
  OnBackward(out, [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    if (Needs(a)) Grad(a) += g;
    if (Needs(b)) Grad(b) += g;
  });
  return out;
}

Var Graph::Sub(Var a, Var b) {
  CheckSameShape(value(a), value(b), "Sub");
  Var out = Push(value(a) - value(b), Needs(a) || Needs(b));
  OnBackward(out, [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    if (Needs(a)) Grad(a) += g;
    if (Needs(b)) Grad(b) -= g;
  });
  return out;
}

Var Graph::Mul(Var a, Var b) {
  CheckSameShape(value(a), value(b), "Mul");
  Var out = Push(value(a).cwiseProduct(value(b)), Needs(a) || Needs(b));
  OnBackward(out, [this, a, b, out] {
    const Matrix& g = nodes_[out.id].grad;
    if (Needs(a)) Grad(a) += g.cwiseProduct(value(b));
    if (Needs(b)) Grad(b) += g.cwiseProduct(value(a));
  });
  return out;
}

Var Graph::Scale(Var a, double s) { return AffineScalar(a, s, 0.0); }

Var Graph::AffineScalar(Var a, double s, double c) {
  Matrix y = (value(a) * s).array() + c;
  Var out = Push(std::move(y), Needs(a));
  OnBackward(out, [this, a, s, out] { Grad(a) += nodes_[out.id].grad * s; });
  return out;
}

Var Graph::Relu(Var a) {
  Var out = Push(value(a).cwiseMax(0.0), Needs(a));
  OnBackward(out, [this, a, out] {
    const Matrix& g = nodes_[out.id].grad;
    Grad(a) += (value(a).array() > 0.0).select(g, 0.0);
  });
  return out;
}

Var Graph::Tanh(Var a) {
  Var out = Push(value(a).array().tanh().matrix(), Needs(a));
  OnBackward(out, [this, a, out] {
    const Matrix& y = nodes_[out.id].value;
    Grad(a).array() += nodes_[out.id].grad.array() * (1.0 - y.array().square());
  });
  return out;
}

Var Graph::Sigmoid(Var a) {
  Matrix y = (1.0 + (-value(a).array()).exp()).inverse().matrix();
  Var out = Push(std::move(y), Needs(a));
  OnBackward(out, [this, a, out] {
    const Matrix& y = nodes_[out.id].value;
    Grad(a).array() +=
        nodes_[out.id].grad.array() * y.array() * (1.0 - y.array());
  });
  return out;
}

Var Graph::Dropout(Var a, double p) {
  if (!training_ || p <= 0.0) return a;
  if (p >= 1.0) throw InvalidArgument("dropout probability must be < 1");
  const Matrix& av = value(a);
  Matrix mask(av.rows(), av.cols());
  const double keep = 1.0 / (1.0 - p);
  for (int64_t i = 0; i < mask.size(); ++i) {
    mask.data()[i] = Uniform(rng_) < p ? 0.0 : keep;
  }
  Var out = Push(av.cwiseProduct(mask), Needs(a));
  OnBackward(out, [this, a, out, mask = std::move(mask)] {
    Grad(a) += nodes_[out.id].grad.cwiseProduct(mask);
  });
  return out;
}

Var Graph::ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("ConcatCols: no inputs");
  const int64_t rows = value(parts[0]).rows();
  int64_t cols = 0;
  bool rg = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) {
      throw InvalidArgument("ConcatCols: row count mismatch");
    }
    cols += value(p).cols();
    rg = rg || Needs(p);
  }
  Matrix y(rows, cols);
  int64_t c = 0;
  for (Var p : parts) {
    y.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  Var out = Push(std::move(y), rg);
  OnBackward(out, [this, parts, out] {
    const Matrix& g = nodes_[out.id].grad;
    int64_t c = 0;
    for (Var p : parts) {
      const int64_t w = value(p).cols();
      if (Needs(p)) Grad(p) += g.middleCols(c, w);
      c += w;
    }
  });
  return out;
}

Var Graph::SliceCols(Var a, int begin, int count) {
  if (begin < 0 || count <= 0 || begin + count > value(a).cols()) {
    throw InvalidArgument("SliceCols: range out of bounds");
  }
  Var out = Push(value(a).middleCols(begin, count), Needs(a));
  OnBackward(out, [this, a, begin, count, out] {
    Grad(a).middleCols(begin, count) += nodes_[out.id].grad;
  });
  return out;
}

Var Graph::SliceRows(Var a, int begin, int count) {
  if (begin < 0 || count <= 0 || begin + count > value(a).rows()) {
    throw InvalidArgument("SliceRows: range out of bounds");
  }
  Var out = Push(value(a).middleRows(begin, count), Needs(a));
  OnBackward(out, [this, a, begin, count, out] {
    Grad(a).middleRows(begin, count) += nodes_[out.id].grad;
  });
  return out;
}

Var Graph::Reshape(Var a, int rows, int cols) {
  const Matrix& av = value(a);
  if (static_cast<int64_t>(rows) * cols != av.size()) {
    throw InvalidArgument("Reshape: element count mismatch");
  }
  Matrix y = Eigen::Map<const Matrix>(av.data(), rows, cols);
  Var out = Push(std::move(y), Needs(a));
  OnBackward(out, [this, a, out] {
    Matrix& ga = Grad(a);
    const Matrix& g = nodes_[out.id].grad;
    Eigen::Map<Matrix>(ga.data(), g.rows(), g.cols()) += g;
  });
  return out;
}

Var Graph::BroadcastSteps(Var a, int steps) {
  const Matrix& av = value(a);
  const int64_t batch = av.rows();
  Matrix y(steps * batch, av.cols());
  for (int t = 0; t < steps; ++t) y.middleRows(t * batch, batch) = av;
  Var out = Push(std::move(y), Needs(a));
  OnBackward(out, [this, a, steps, batch, out] {
    const Matrix& g = nodes_[out.id].grad;
    Matrix& ga = Grad(a);
    for (int t = 0; t < steps; ++t) ga += g.middleRows(t * batch, batch);
  });
  return out;
}

Var Graph::MeanOverTime(Var a, int batch) {
  const Matrix& av = value(a);
  if (batch <= 0 || av.rows() % batch != 0) {
    throw InvalidArgument("MeanOverTime: rows not divisible by batch");
  }
  const int64_t steps = av.rows() / batch;
  Matrix y = Matrix::Zero(batch, av.cols());
  for (int64_t t = 0; t < steps; ++t) y += av.middleRows(t * batch, batch);
  y /= static_cast<double>(steps);
  Var out = Push(std::move(y), Needs(a));
  OnBackward(out, [this, a, batch, steps, out] {
    const Matrix g = nodes_[out.id].grad / static_cast<double>(steps);
    Matrix& ga = Grad(a);
    for (int64_t t = 0; t < steps; ++t) ga.middleRows(t * batch, batch) += g;
  });
  return out;
}

Var Graph::Conv1d(Var x, Var w, Var b, int kernel, int batch) {
  const Matrix& xv = value(x);
  const int64_t cin = xv.cols();
  if (batch <= 0 || xv.rows() % batch != 0) {
    throw InvalidArgument("Conv1d: rows not divisible by batch");
  }
  if (value(w).rows() != kernel * cin) {
    throw InvalidArgument("Conv1d: weight rows " +
                          std::to_string(value(w).rows()) + " != kernel " +
                          std::to_string(kernel) + " x channels " +
                          std::to_string(cin));
  }
  const int64_t steps = xv.rows() / batch;
  const int left = (kernel - 1) / 2;
  Matrix cols = Matrix::Zero(xv.rows(), kernel * cin);
  for (int k = 0; k < kernel; ++k) {
    const int64_t shift = k - left;
    const int64_t t0 = std::max<int64_t>(0, -shift);
    const int64_t t1 = std::min<int64_t>(steps, steps - shift);
    if (t1 <= t0) continue;
    cols.block(t0 * batch, k * cin, (t1 - t0) * batch, cin) =
        xv.middleRows((t0 + shift) * batch, (t1 - t0) * batch);
  }
  Var c = Push(std::move(cols), Needs(x));
  OnBackward(c, [this, x, c, kernel, batch, steps, left, cin] {
    const Matrix& g = nodes_[c.id].grad;
    Matrix& gx = Grad(x);
    for (int k = 0; k < kernel; ++k) {
      const int64_t shift = k - left;
      const int64_t t0 = std::max<int64_t>(0, -shift);
      const int64_t t1 = std::min<int64_t>(steps, steps - shift);
      if (t1 <= t0) continue;
      gx.middleRows((t0 + shift) * batch, (t1 - t0) * batch) +=
          g.block(t0 * batch, k * cin, (t1 - t0) * batch, cin);
    }
  });
  return Affine(c, w, b);
}

Var Graph::MaxPool1d(Var x, int batch) {
  const Matrix& xv = value(x);
  if (batch <= 0 || xv.rows() % batch != 0) {
    throw InvalidArgument("MaxPool1d: rows not divisible by batch");
  }
  const int64_t n = xv.rows() - batch;
  Matrix y = xv;
  // 1 where the value came from the next step.
  Matrix from_next = Matrix::Zero(xv.rows(), xv.cols());
  if (n > 0) {
    auto next = xv.bottomRows(n);
    from_next.topRows(n) =
        (next.array() > xv.topRows(n).array()).cast<double>();
    y.topRows(n) = xv.topRows(n).cwiseMax(next);
  }
  Var out = Push(std::move(y), Needs(x));
  OnBackward(out, [this, x, out, n, from_next = std::move(from_next)] {
    const Matrix& g = nodes_[out.id].grad;
    Matrix& gx = Grad(x);
    gx.array() += g.array() * (1.0 - from_next.array());
    if (n > 0) {
      gx.bottomRows(n).array() +=
          g.topRows(n).array() * from_next.topRows(n).array();
    }
  });
  return out;
}

Var Graph::Gru(Var gx, Var w_hh, Var b_hh, int batch, bool reverse) {
  const Matrix& gxv = value(gx);
  const Matrix& whh = value(w_hh);
  const int64_t hidden = whh.rows();
  if (whh.cols() != 3 * hidden || gxv.cols() != 3 * hidden) {
    throw InvalidArgument("Gru: gate width mismatch");
  }
  if (batch <= 0 || gxv.rows() % batch != 0) {
    throw InvalidArgument("Gru: rows not divisible by batch");
  }
  const int64_t steps = gxv.rows() / batch;
  const RowVector bhh = value(b_hh).row(0);

  Matrix hs(gxv.rows(), hidden);
  Matrix r_all(gxv.rows(), hidden), z_all(gxv.rows(), hidden),
      n_all(gxv.rows(), hidden), ghn_all(gxv.rows(), hidden);
  Matrix h = Matrix::Zero(batch, hidden);
  Matrix gh(batch, 3 * hidden);
  for (int64_t i = 0; i < steps; ++i) {
    const int64_t t = reverse ? steps - 1 - i : i;
    const int64_t row = t * batch;
    gh.noalias() = h * whh;
    gh.rowwise() += bhh;
    auto gxt = gxv.middleRows(row, batch);
    auto r = r_all.middleRows(row, batch);
    auto z = z_all.middleRows(row, batch);
    auto n = n_all.middleRows(row, batch);
    r = (1.0 + (-(gxt.leftCols(hidden) + gh.leftCols(hidden)).array()).exp())
            .inverse()
            .matrix();
    z = (1.0 +
         (-(gxt.middleCols(hidden, hidden) + gh.middleCols(hidden, hidden))
               .array())
             .exp())
            .inverse()
            .matrix();
    ghn_all.middleRows(row, batch) = gh.rightCols(hidden);
    n = (gxt.rightCols(hidden).array() +
         r.array() * gh.rightCols(hidden).array())
            .tanh()
            .matrix();
    h = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
    hs.middleRows(row, batch) = h;
  }

  Var out = Push(std::move(hs), Needs(gx) || Needs(w_hh) || Needs(b_hh));
  OnBackward(out, [this, gx, w_hh, b_hh, out, batch, steps, hidden, reverse,
                   r_all = std::move(r_all), z_all = std::move(z_all),
                   n_all = std::move(n_all), ghn_all = std::move(ghn_all)] {
    const Matrix& g = nodes_[out.id].grad;
    const Matrix& hs = nodes_[out.id].value;
    const Matrix& whh = value(w_hh);
    Matrix dgx_all(hs.rows(), 3 * hidden);
    Matrix dwhh = Matrix::Zero(hidden, 3 * hidden);
    RowVector dbhh = RowVector::Zero(3 * hidden);
    Matrix carry = Matrix::Zero(batch, hidden);
    Matrix h_prev(batch, hidden);
    Matrix dgh(batch, 3 * hidden);
    for (int64_t i = steps - 1; i >= 0; --i) {
      const int64_t t = reverse ? steps - 1 - i : i;
      const int64_t row = t * batch;
      if (i == 0) {
        h_prev.setZero();
      } else {
        const int64_t tp = reverse ? t + 1 : t - 1;
        h_prev = hs.middleRows(tp * batch, batch);
      }
      auto r = r_all.middleRows(row, batch).array();
      auto z = z_all.middleRows(row, batch).array();
      auto n = n_all.middleRows(row, batch).array();
      auto ghn = ghn_all.middleRows(row, batch).array();
      const Eigen::ArrayXXd dh = (g.middleRows(row, batch) + carry).array();
      const Eigen::ArrayXXd dn = dh * (1.0 - z);
      const Eigen::ArrayXXd dz = dh * (h_prev.array() - n);
      const Eigen::ArrayXXd dan = dn * (1.0 - n.square());
      const Eigen::ArrayXXd dar = dan * ghn * r * (1.0 - r);
      const Eigen::ArrayXXd daz = dz * z * (1.0 - z);
      auto dgx = dgx_all.middleRows(row, batch);
      dgx.leftCols(hidden) = dar.matrix();
      dgx.middleCols(hidden, hidden) = daz.matrix();
      dgx.rightCols(hidden) = dan.matrix();
      dgh.leftCols(hidden) = dar.matrix();
      dgh.middleCols(hidden, hidden) = daz.matrix();
      dgh.rightCols(hidden) = (dan * r).matrix();
      dwhh.noalias() += h_prev.transpose() * dgh;
      dbhh += dgh.colwise().sum();
      carry = (dh * z).matrix();
      carry.noalias() += dgh * whh.transpose();
    }
    if (Needs(gx)) Grad(gx) += dgx_all;
    if (Needs(w_hh)) Grad(w_hh) += dwhh;
    if (Needs(b_hh)) Grad(b_hh) += dbhh;
  });
  return out;
}

Var Graph::Conv2d(Var x, Var w, Var b, const MapShape& in,
                  MapShape* out_shape) {
  const Matrix& xv = value(x);
  if (xv.rows() != in.rows() || xv.cols() != in.channels) {
    throw InvalidArgument("Conv2d: input does not match its map shape");
  }
  const int cin = in.channels;
  if (value(w).rows() != 9 * cin) {
    throw InvalidArgument("Conv2d: weight rows must be 9 x channels");
  }
  MapShape o;
  o.time = (in.time + 1) / 2;
  o.batch = in.batch;
  o.freq = (in.freq + 1) / 2;
  o.channels = static_cast<int>(value(w).cols());
  auto in_row = [in](int t, int bi, int f) {
    return (static_cast<int64_t>(t) * in.batch + bi) * in.freq + f;
  };
  auto out_row = [o](int t, int bi, int f) {
    return (static_cast<int64_t>(t) * o.batch + bi) * o.freq + f;
  };
  Matrix cols = Matrix::Zero(o.rows(), 9 * cin);
  for (int t = 0; t < o.time; ++t) {
    for (int bi = 0; bi < o.batch; ++bi) {
      for (int f = 0; f < o.freq; ++f) {
        const int64_t r = out_row(t, bi, f);
        for (int kt = 0; kt < 3; ++kt) {
          const int ti = 2 * t - 1 + kt;
          if (ti < 0 || ti >= in.time) continue;
          for (int kf = 0; kf < 3; ++kf) {
            const int fi = 2 * f - 1 + kf;
            if (fi < 0 || fi >= in.freq) continue;
            cols.block(r, (kt * 3 + kf) * cin, 1, cin) =
                xv.row(in_row(ti, bi, fi));
          }
        }
      }
    }
  }
  Var c = Push(std::move(cols), Needs(x));
  OnBackward(c, [this, x, c, in, o, in_row, out_row, cin] {
    const Matrix& g = nodes_[c.id].grad;
    Matrix& gx = Grad(x);
    for (int t = 0; t < o.time; ++t) {
      for (int bi = 0; bi < o.batch; ++bi) {
        for (int f = 0; f < o.freq; ++f) {
          const int64_t r = out_row(t, bi, f);
          for (int kt = 0; kt < 3; ++kt) {
            const int ti = 2 * t - 1 + kt;
            if (ti < 0 || ti >= in.time) continue;
            for (int kf = 0; kf < 3; ++kf) {
              const int fi = 2 * f - 1 + kf;
              if (fi < 0 || fi >= in.freq) continue;
              gx.row(in_row(ti, bi, fi)) +=
                  g.block(r, (kt * 3 + kf) * cin, 1, cin);
            }
          }
        }
      }
    }
  });
  if (out_shape != nullptr) *out_shape = o;
  return Affine(c, w, b);
}

Var Graph::L1Loss(Var pred, const Matrix& target) {
  CheckSameShape(value(pred), target, "L1Loss");
  if (target.size() == 0) throw InvalidArgument("L1Loss: empty input");
  const Matrix diff = value(pred) - target;
  Matrix y(1, 1);
  y(0, 0) = diff.cwiseAbs().mean();
  Var out = Push(std::move(y), Needs(pred));
  OnBackward(out, [this, pred, out, diff] {
    const double s = nodes_[out.id].grad(0, 0) / diff.size();
    Grad(pred).array() += diff.array().sign() * s;
  });
  return out;
}

Var Graph::CrossEntropy(Var logits, const std::vector<int>& labels) {
  const Matrix& lv = value(logits);
  if (static_cast<int64_t>(labels.size()) != lv.rows() || labels.empty()) {
    throw InvalidArgument("CrossEntropy: one label per row required");
  }
  Matrix prob(lv.rows(), lv.cols());
  double total = 0.0;
  for (int64_t i = 0; i < lv.rows(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= lv.cols()) {
      throw InvalidArgument("CrossEntropy: label " + std::to_string(label) +
                            " out of range for " + std::to_string(lv.cols()) +
                            " classes");
    }
    const double m = lv.row(i).maxCoeff();
    const double lse = m + std::log((lv.row(i).array() - m).exp().sum());
    prob.row(i) = (lv.row(i).array() - lse).exp().matrix();
    total += lse - lv(i, label);
  }
  Matrix y(1, 1);
  y(0, 0) = total / lv.rows();
  Var out = Push(std::move(y), Needs(logits));
  OnBackward(out, [this, logits, out, labels, prob = std::move(prob)] {
    const double s = nodes_[out.id].grad(0, 0) / prob.rows();
    Matrix d = prob;
    for (size_t i = 0; i < labels.size(); ++i) d(i, labels[i]) -= 1.0;
    Grad(logits) += d * s;
  });
  return out;
}

Var Graph::Sum(Var a) {
  Matrix y(1, 1);
  y(0, 0) = value(a).sum();
  Var out = Push(std::move(y), Needs(a));
  OnBackward(out,
             [this, a, out] { Grad(a).array() += nodes_[out.id].grad(0, 0); });
  return out;
}

}  // namespace osvc::nn
