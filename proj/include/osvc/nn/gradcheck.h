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

#ifndef OSVC_NN_GRADCHECK_H_
#define OSVC_NN_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "osvc/nn/parameters.h"

namespace osvc::nn {

struct GradProbe {
  std::string name;
  int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

// |a - n| / max(|a|, |n|, abs_floor).
double RelativeError(double analytic, double numeric, double abs_floor = 1e-6);

// Compares analytic gradients with central differences at `num_probes`
// elements drawn uniformly over all trainable parameter elements.
// `loss` evaluates the scalar objective and, when its argument is true,
// accumulates gradients into Parameter::grad (which is zeroed first).
std::vector<GradProbe> ProbeGradients(ParameterSet* params,
                                      const std::function<double(bool)>& loss,
                                      int num_probes, uint64_t seed,
                                      double eps = 1e-5);

}  // namespace osvc::nn

#endif  // OSVC_NN_GRADCHECK_H_
