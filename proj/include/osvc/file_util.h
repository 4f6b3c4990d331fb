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

#ifndef OSVC_FILE_UTIL_H_
#define OSVC_FILE_UTIL_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace osvc {

std::string ReadFileBytes(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over `path`. Parent directories
// are created. Throws InvalidArgument if the location is not writable.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

// Hex digests.
std::string Sha256Hex(std::string_view bytes);
// Same digest git assigns to a blob with this content.
std::string GitBlobHash(std::string_view bytes);

}  // namespace osvc

#endif  // OSVC_FILE_UTIL_H_
