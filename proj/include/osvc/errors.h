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

#ifndef OSVC_ERRORS_H_
#define OSVC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace osvc {

// Bad arguments, shapes or configuration. Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what)
      : std::invalid_argument(what) {}
};

// Malformed or unreadable input data (WAV, tensor files). Exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Statistic undefined for the given input (e.g. Pearson of a constant).
class DegenerateInput : public InvalidArgument {
 public:
  explicit DegenerateInput(const std::string& what) : InvalidArgument(what) {}
};

}  // namespace osvc

#endif  // OSVC_ERRORS_H_
