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

#include <set>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "pas/error.hpp"
#include "pas/hashing.hpp"
#include "pas/io.hpp"

namespace fs = std::filesystem;

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(pas::Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(pas::Sha256Hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("fnv1a matches reference values") {
  CHECK(pas::Fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(pas::Fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(pas::Fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("hash fields separate their inputs") {
  CHECK(pas::HashFields({"ab", "c"}) != pas::HashFields({"a", "bc"}));
  CHECK(pas::HashFields({"real", "x"}) != pas::HashFields({"synthetic", "x"}));
  CHECK(pas::HashFields({"a", "b"}) == pas::HashFields({"a", "b"}));
}

TEST_CASE("hex64 is fixed width lower case") {
  CHECK(pas::Hex64(0) == "0000000000000000");
  CHECK(pas::Hex64(0xABCDEFULL) == "0000000000abcdef");
  CHECK(pas::Hex64(~0ULL) == "ffffffffffffffff");
}

TEST_CASE("atomic write replaces content and leaves no temp files") {
  const auto dir = oracle::TempDir("atomic");
  const auto path = dir / "out.txt";
  pas::io::AtomicWrite(path, "one");
  pas::io::AtomicWrite(path, "two");
  CHECK(pas::io::ReadFile(path) == "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}

TEST_CASE("a crash before rename keeps the old content") {
  const auto dir = oracle::TempDir("atomic_crash");
  const auto path = dir / "out.txt";
  pas::io::AtomicWrite(path, "old");
  pas::io::SetBeforeRenameHook([](const fs::path&) { throw std::runtime_error("killed"); });
  CHECK_THROWS(pas::io::AtomicWrite(path, "new"));
  pas::io::SetBeforeRenameHook({});
  CHECK(pas::io::ReadFile(path) == "old");
}

TEST_CASE("jsonl round trip and error location") {
  const auto dir = oracle::TempDir("jsonl");
  std::vector<pas::io::Json> rows = {{{"a", 1}}, {{"b", "x"}}};
  pas::io::WriteJsonl(dir / "r.jsonl", rows);
  CHECK(pas::io::ReadJsonl(dir / "r.jsonl") == rows);
  CHECK(pas::io::ParseJsonl("{}\n\n{}\n", "t").size() == 2);
  try {
    pas::io::ParseJsonl("{}\n{oops\n", "t.jsonl");
    FAIL("expected a format error");
  } catch (const pas::Error& e) {
    CHECK(e.kind() == pas::ErrorKind::kFormat);
    CHECK(std::string(e.what()).find("t.jsonl:2") != std::string::npos);
  }
}

TEST_CASE("reading a missing file is an io error") {
  try {
    pas::io::ReadFile("/nonexistent/pas/file");
    FAIL("expected an io error");
  } catch (const pas::Error& e) {
    CHECK(e.kind() == pas::ErrorKind::kIo);
  }
}

TEST_CASE("file lock is exclusive until released") {
  const auto dir = oracle::TempDir("lock");
  {
    pas::io::FileLock first(dir / ".lock");
    CHECK_THROWS_AS(pas::io::FileLock(dir / ".lock"), pas::Error);
  }
  CHECK_NOTHROW(pas::io::FileLock(dir / ".lock"));
}
