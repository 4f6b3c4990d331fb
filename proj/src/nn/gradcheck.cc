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

#include "osvc/nn/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "osvc/errors.h"
#include "osvc/random.h"

namespace osvc::nn {

double RelativeError(double analytic, double numeric, double abs_floor) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

std::vector<GradProbe> ProbeGradients(ParameterSet* params,
                                      const std::function<double(bool)>& loss,
                                      int num_probes, uint64_t seed,
                                      double eps) {
  std::vector<Parameter*> trainable;
  int64_t total = 0;
  for (Parameter* p : params->All()) {
    if (!p->trainable) continue;
    trainable.push_back(p);
    total += p->value.size();
  }
  if (total == 0) throw InvalidArgument("no trainable parameters to probe");

  params->ZeroGrad();
  loss(true);

  std::mt19937_64 rng(seed);
  std::vector<GradProbe> probes;
  for (int i = 0; i < num_probes; ++i) {
    int64_t flat = static_cast<int64_t>(Uniform(rng) * total);
    Parameter* p = trainable.front();
    for (Parameter* q : trainable) {
      if (flat < q->value.size()) {
        p = q;
        break;
      }
      flat -= q->value.size();
    }
    double& w = p->value.data()[flat];
    const double saved = w;
    w = saved + eps;
    const double up = loss(false);
    w = saved - eps;
    const double down = loss(false);
    w = saved;
    GradProbe probe;
    probe.name = p->name;
    probe.index = flat;
    probe.analytic = p->grad.data()[flat];
    probe.numeric = (up - down) / (2.0 * eps);
    probe.rel_error = RelativeError(probe.analytic, probe.numeric);
    probes.push_back(probe);
  }
  return probes;
}

}  // namespace osvc::nn
