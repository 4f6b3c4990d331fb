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

#include "osvc/nn/optimizer.h"

#include <cmath>

namespace osvc::nn {

void Adam::Step(ParameterSet* params, double lr) {
  ++steps_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (Parameter* p : params->All()) {
    if (!p->trainable) continue;
    if (p->grad.size() != p->value.size()) p->ZeroGrad();
    Moments& s = state_[p->name];
    if (s.m.size() == 0) {
      s.m.setZero(p->value.rows(), p->value.cols());
      s.v.setZero(p->value.rows(), p->value.cols());
    }
    s.m = options_.beta1 * s.m + (1.0 - options_.beta1) * p->grad;
    s.v = options_.beta2 * s.v +
          (1.0 - options_.beta2) * p->grad.cwiseProduct(p->grad);
    p->value.array() -=
        lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + options_.eps);
  }
}

}  // namespace osvc::nn
