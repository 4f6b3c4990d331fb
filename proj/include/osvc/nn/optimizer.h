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

#ifndef OSVC_NN_OPTIMIZER_H_
#define OSVC_NN_OPTIMIZER_H_

#include <map>
#include <string>

#include "osvc/nn/parameters.h"

namespace osvc::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Only parameters marked trainable are touched,
// so frozen tensors keep their exact bit patterns.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void Step(ParameterSet* params, double lr);
  int64_t steps() const { return steps_; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  AdamOptions options_;
  int64_t steps_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace osvc::nn

#endif  // OSVC_NN_OPTIMIZER_H_
