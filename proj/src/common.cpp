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

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>

#include "pas/error.hpp"
#include "pas/hashing.hpp"
#include "pas/io.hpp"
#include "pas/log.hpp"

namespace pas {

std::string_view ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kIntegrity: return "integrity error";
    case ErrorKind::kTransport: return "transport error";
    case ErrorKind::kProtocol: return "protocol error";
    case ErrorKind::kEmptyStore: return "empty store";
    case ErrorKind::kEmptyDomain: return "empty domain";
    case ErrorKind::kInvalidConcept: return "invalid concept";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kStage: return "stage error";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kMockScript: return "mock script miss";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

std::uint64_t HashFields(std::initializer_list<std::string_view> fields) {
  std::uint64_t state = kFnvOffset;
  bool first = true;
  for (auto field : fields) {
    if (!first) state = Fnv1a("\x1f", state);
    state = Fnv1a(field, state);
    first = false;
  }
  return state;
}

std::string Hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf.data(), 16);
}

std::string Sha256Hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::shared_ptr<spdlog::logger> Log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("pas");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    const char* env = std::getenv("PAS_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return logger;
}

namespace io {

namespace {
std::mutex hook_mutex;
std::function<void(const std::filesystem::path&)> before_rename_hook;
}  // namespace

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void SetBeforeRenameHook(std::function<void(const std::filesystem::path&)> hook) {
  std::lock_guard lock(hook_mutex);
  before_rename_hook = std::move(hook);
}

void AtomicWrite(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorKind::kIo, "cannot create " + tmp.string());
  const char* data = content.data();
  std::size_t left = content.size();
  while (left > 0) {
    ssize_t n = ::write(fd, data, left);
    if (n < 0) {
      ::close(fd);
      throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
    }
    data += n;
    left -= static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  {
    std::function<void(const std::filesystem::path&)> hook;
    {
      std::lock_guard lock(hook_mutex);
      hook = before_rename_hook;
    }
    if (hook) hook(path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "rename to " + path.string() + " failed: " + ec.message());
}

std::string ToJsonl(const std::vector<Json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<Json> ParseJsonl(std::string_view text, const std::string& source_name) {
  std::vector<Json> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::kFormat,
                  source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<Json> ReadJsonl(const std::filesystem::path& path) {
  return ParseJsonl(ReadFile(path), path.string());
}

void WriteJsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
  AtomicWrite(path, ToJsonl(rows));
}

std::string DumpPretty(const Json& value) { return value.dump(2) + "\n"; }

FileLock::FileLock(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorKind::kIo, "cannot open lock " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorKind::kStage, "workspace is locked by another run: " + path.string());
  }
}

FileLock::~FileLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace io
}  // namespace pas
