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

#ifndef OSVC_RANDOM_H_
#define OSVC_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace osvc {

uint64_t SplitMix(uint64_t x);
// Combines two seeds into one well-mixed value.
uint64_t Mix(uint64_t a, uint64_t b);
// FNV-1a, stable across platforms (unlike std::hash).
uint64_t HashString(std::string_view s);

// Portable draws; std distributions are implementation-defined.
double Uniform(std::mt19937_64& rng);
double Normal(std::mt19937_64& rng);
// Uniform integer in [0, n).
int UniformInt(std::mt19937_64& rng, int n);

}  // namespace osvc

#endif  // OSVC_RANDOM_H_
