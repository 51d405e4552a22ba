// Copyright (c) 2026 The pas Authors. All Rights Reserved
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

#ifndef PAS_IO_HPP_
#define PAS_IO_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pas::io {

using Json = nlohmann::json;

std::string ReadFile(const std::filesystem::path& path);

/// Writes to a sibling temp file, fsyncs, then renames over `path`, so
/// readers see either the old content or the new one.
void AtomicWrite(const std::filesystem::path& path, std::string_view content);

/// Hook invoked between writing the temp file and the rename. Tests use it
/// to simulate a crash at the most awkward moment.
void SetBeforeRenameHook(std::function<void(const std::filesystem::path&)> hook);

std::string ToJsonl(const std::vector<Json>& rows);
std::vector<Json> ParseJsonl(std::string_view text, const std::string& source_name);
std::vector<Json> ReadJsonl(const std::filesystem::path& path);
void WriteJsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

/// Canonical dump used for every file we digest: sorted keys, two-space indent.
std::string DumpPretty(const Json& value);

/// Exclusive advisory lock on a file; released on destruction or process death.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace pas::io

#endif  // PAS_IO_HPP_
