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

#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "pas/error.hpp"
#include "pas/io.hpp"
#include "pas/pipeline.hpp"

using namespace pas::pipeline;
using pas::Error;
using pas::ErrorKind;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Small corpus so a full offline run stays well under a second.
MockCorpusOptions SmallCorpus() {
  MockCorpusOptions o;
  o.vocabulary_size = 20;
  o.images_per_concept = 30;
  o.background = 400;
  o.protected_count = 40;
  o.planted_leaks = 8;
  return o;
}

struct Corpus {
  fs::path dir;
  MockCorpusInfo info;
  PipelineConfig config;
};

Corpus MakeCorpus(const std::string& name, MockCorpusOptions options = SmallCorpus()) {
  Corpus c;
  c.dir = oracle::TempDir(name);
  c.info = BuildMockCorpus(c.dir, options);
  c.config = LoadConfig(c.info.config);
  return c;
}

RunOptions Offline() {
  RunOptions o;
  o.offline = true;
  return o;
}

Json RawConfig(const Corpus& c) { return Json::parse(pas::io::ReadFile(c.info.config)); }

std::vector<std::string> Validate(const Json& raw, const fs::path& base, bool offline) {
  return ValidateConfig(ParseConfig(raw, base), offline);
}

bool Mentions(const std::vector<std::string>& messages, const std::string& needle) {
  for (const auto& m : messages) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::size_t LineCount(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

class BrokenOod final : public pas::gateway::OodProvider {
 public:
  std::vector<pas::gateway::OODProbRow> Query(std::span<const std::string>,
                                              std::span<const std::string>, bool) override {
    CountCall();
    throw Error(ErrorKind::kTransport, "ood endpoint unreachable");
  }
};

}  // namespace

TEST_CASE("exit codes per error kind") {
  CHECK(ExitCode(ErrorKind::kConfig) == 2);
  CHECK(ExitCode(ErrorKind::kCorruption) == 4);
  for (auto k : {ErrorKind::kStage, ErrorKind::kTransport, ErrorKind::kProtocol,
                 ErrorKind::kFormat, ErrorKind::kIo, ErrorKind::kDomain}) {
    CHECK(ExitCode(k) == 3);
  }
}

TEST_CASE("stage names round trip") {
  for (auto s : kAllStages) CHECK(ParseStage(ToString(s)) == s);
  CHECK(ToString(Stage::kDedup) == "dedup");
  CHECK_THROWS_AS(ParseStage("nope"), Error);
}

TEST_CASE("environment interpolation") {
  ::setenv("PAS_TEST_TOKEN", "s3cret", 1);
  ::unsetenv("PAS_TEST_MISSING");
  std::vector<std::string> unresolved;
  const Json in = {{"a", "Bearer ${PAS_TEST_TOKEN}"},
                   {"b", {{"c", "${PAS_TEST_MISSING}"}}},
                   {"n", 3},
                   {"list", {"x", "${PAS_TEST_TOKEN}"}}};
  const Json out = InterpolateEnv(in, unresolved);
  CHECK(out["a"] == "Bearer s3cret");
  CHECK(out["b"]["c"] == "");
  CHECK(out["n"] == 3);
  CHECK(out["list"][1] == "s3cret");
  REQUIRE(unresolved.size() == 1);
  CHECK(unresolved[0] == "/b/c: PAS_TEST_MISSING");
}

TEST_CASE("config validation") {
  auto c = MakeCorpus("config");
  const Json raw = RawConfig(c);
  ::unsetenv("PAS_API_KEY");

  SUBCASE("the generated config is valid offline") {
    CHECK(Validate(raw, c.dir, true).empty());
  }
  SUBCASE("online it needs the api key") {
    CHECK(Mentions(Validate(raw, c.dir, false), "environment variable not set"));
    ::setenv("PAS_API_KEY", "k", 1);
    CHECK(Validate(raw, c.dir, false).empty());
    ::unsetenv("PAS_API_KEY");
  }
  SUBCASE("lambda1 must lie strictly inside the unit interval") {
    for (double v : {0.0, 1.0, -0.2}) {
      Json bad = raw;
      bad["discovery"]["lambda1"] = v;
      CHECK(Mentions(Validate(bad, c.dir, true), "lambda1"));
    }
  }
  SUBCASE("a missing provider names the stage and role") {
    ::setenv("PAS_API_KEY", "k", 1);
    Json bad = raw;
    bad["providers"].erase("image_gen");
    const auto v = Validate(bad, c.dir, false);
    CHECK(Mentions(v, "stage synth needs a 'image_gen' provider endpoint"));
    bad["stages"]["synth"] = false;
    CHECK(Validate(bad, c.dir, false).empty());
    ::unsetenv("PAS_API_KEY");
  }
  SUBCASE("validator must be a different model") {
    ::setenv("PAS_API_KEY", "k", 1);
    Json bad = raw;
    bad["providers"]["validator"]["model"] = bad["providers"]["chat"]["model"];
    CHECK(Mentions(Validate(bad, c.dir, false), "validator model must differ"));
    ::unsetenv("PAS_API_KEY");
  }
  SUBCASE("every problem is reported at once") {
    Json bad = raw;
    bad["discovery"]["lambda1"] = 2.0;
    bad["dedup"]["lambda_dup"] = 1.5;
    bad["surprise"] = 1;
    bad["paths"]["image_store"] = "missing.emb";
    const auto v = Validate(bad, c.dir, true);
    CHECK(v.size() >= 4);
    CHECK(Mentions(v, "lambda1"));
    CHECK(Mentions(v, "surprise"));
    CHECK(Mentions(v, "missing.emb"));
  }
  SUBCASE("wrong types are parse errors, not exceptions") {
    Json bad = raw;
    bad["acquisition"]["n_cap"] = "two";
    bad["target_size"] = -4;
    const auto v = Validate(bad, c.dir, true);
    CHECK(Mentions(v, "n_cap"));
    CHECK(Mentions(v, "target_size"));
  }
  SUBCASE("relative paths resolve against the config directory") {
    const auto parsed = ParseConfig(raw, c.dir);
    CHECK(parsed.paths.workspace == c.dir / "workspace");
    REQUIRE(parsed.paths.image_store);
    CHECK(*parsed.paths.image_store == c.dir / "images.emb");
  }
  SUBCASE("an invalid config aborts the run with kConfig") {
    Json bad = raw;
    bad["discovery"]["lambda1"] = 0.0;
    const auto config = ParseConfig(bad, c.dir);
    CHECK(KindOf([&] { RunPipeline(config, Offline()); }) == ErrorKind::kConfig);
  }
}

TEST_CASE("redacted config hides tokens") {
  auto c = MakeCorpus("redact");
  ::setenv("PAS_API_KEY", "very-secret", 1);
  const auto config = LoadConfig(c.info.config);
  ::unsetenv("PAS_API_KEY");
  const std::string redacted = ConfigToJson(config, true).dump();
  CHECK(redacted.find("very-secret") == std::string::npos);
  CHECK(redacted.find("***") != std::string::npos);
  CHECK(ConfigToJson(config, false).dump().find("very-secret") != std::string::npos);
}

TEST_CASE("offline run end to end") {
  auto c = MakeCorpus("smoke");
  const auto attempts = pas::gateway::HttplibTransport::ConnectionAttempts();
  const auto result = RunPipeline(c.config, Offline());

  CHECK(pas::gateway::HttplibTransport::ConnectionAttempts() == attempts);
  CHECK(result.executed.size() == kAllStages.size());
  CHECK(pas::curation::TelescopeViolations(result.report).empty());
  CHECK(result.report.removed_dedup == c.info.planted_duplicates);
  CHECK(result.report.removed_leak == c.info.planted_leaks);
  CHECK(result.report.retained == result.retained.size());
  CHECK(result.retained.size() > 0);
  CHECK(LineCount(result.workspace / "manifest.jsonl") == result.retained.size());
  for (const auto& r : result.retained) CHECK(pas::acquisition::Violations(r).empty());

  const Json report = Json::parse(pas::io::ReadFile(result.workspace / "report.json"));
  CHECK(report.contains("discovery"));
  CHECK(report.contains("acquisition"));
  CHECK(report.at("curation").at("retained") == result.retained.size());
  CHECK_FALSE(report.dump().find("created_at") != std::string::npos);

  const Json lock = Json::parse(pas::io::ReadFile(result.workspace / "config.lock.json"));
  CHECK(lock.at("engine_version") == std::string(kEngineVersion));
  CHECK(lock.contains("created_at"));
}

TEST_CASE("two runs of the same config are byte identical") {
  auto a = MakeCorpus("ident_a");
  auto b = MakeCorpus("ident_b");
  RunPipeline(a.config, Offline());
  RunPipeline(b.config, Offline());
  for (const char* f : {"manifest.jsonl", "report.json", "scores.jsonl", "concepts.validated.jsonl"}) {
    CAPTURE(f);
    CHECK(pas::io::ReadFile(a.config.paths.workspace / f) ==
          pas::io::ReadFile(b.config.paths.workspace / f));
  }
}

TEST_CASE("resume of a finished workspace makes no provider calls") {
  auto c = MakeCorpus("noop");
  RunPipeline(c.config, Offline());
  const auto manifest = pas::io::ReadFile(c.config.paths.workspace / "manifest.jsonl");

  auto options = Offline();
  options.providers = MakeMockProviders(c.config);
  const auto result = Resume(c.config, options);
  CHECK(result.executed.empty());
  CHECK(options.providers->total_calls() == 0);
  CHECK(pas::io::ReadFile(c.config.paths.workspace / "manifest.jsonl") == manifest);
  CHECK(result.retained.size() == LineCount(c.config.paths.workspace / "manifest.jsonl"));
}

TEST_CASE("resume detects tampered outputs") {
  auto c = MakeCorpus("tamper");
  RunPipeline(c.config, Offline());
  const fs::path ws = c.config.paths.workspace;

  SUBCASE("modified file") {
    std::ofstream(ws / "dedup.jsonl", std::ios::app) << "\n";
    try {
      Resume(c.config, Offline());
      FAIL("expected corruption");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kCorruption);
      CHECK(std::string(e.what()).find("stage dedup: digest mismatch for dedup.jsonl") !=
            std::string::npos);
    }
  }
  SUBCASE("missing file") {
    fs::remove(ws / "scores.jsonl");
    CHECK(KindOf([&] { Resume(c.config, Offline()); }) == ErrorKind::kCorruption);
  }
  SUBCASE("garbled checkpoint table") {
    pas::io::AtomicWrite(ws / "checkpoints.json", "{not json");
    CHECK(KindOf([&] { Resume(c.config, Offline()); }) == ErrorKind::kCorruption);
  }
  SUBCASE("a fresh run starts over regardless") {
    std::ofstream(ws / "dedup.jsonl", std::ios::app) << "\n";
    CHECK(RunPipeline(c.config, Offline()).executed.size() == kAllStages.size());
  }
}

TEST_CASE("interrupted runs resume to identical outputs") {
  auto ref = MakeCorpus("kill_ref");
  RunPipeline(ref.config, Offline());
  const auto manifest = pas::io::ReadFile(ref.config.paths.workspace / "manifest.jsonl");
  const auto report = pas::io::ReadFile(ref.config.paths.workspace / "report.json");

  struct Kill {
    Stage stage;
    StageEvent event;
    std::size_t expected_first;  // index of the first stage the resume runs
  };
  for (const Kill& k : {Kill{Stage::kDedup, StageEvent::kAfterCheckpoint, 8},
                        Kill{Stage::kDedup, StageEvent::kBeforeCheckpoint, 7},
                        Kill{Stage::kConcepts, StageEvent::kBeforeCheckpoint, 0},
                        Kill{Stage::kPrune, StageEvent::kAfterCheckpoint, 11}}) {
    CAPTURE(ToString(k.stage));
    auto c = MakeCorpus("kill");
    auto options = Offline();
    options.on_stage = [&](Stage s, StageEvent e) {
      if (s == k.stage && e == k.event) throw std::runtime_error("killed");
    };
    CHECK_THROWS(RunPipeline(c.config, options));

    const auto resumed = Resume(c.config, Offline());
    REQUIRE_FALSE(resumed.executed.empty());
    CHECK(resumed.executed.front() == kAllStages[k.expected_first]);
    CHECK(resumed.executed.size() == kAllStages.size() - k.expected_first);
    CHECK(pas::io::ReadFile(c.config.paths.workspace / "manifest.jsonl") == manifest);
    CHECK(pas::io::ReadFile(c.config.paths.workspace / "report.json") == report);
  }
}

TEST_CASE("a changed config on resume only warns") {
  auto c = MakeCorpus("changed");
  RunPipeline(c.config, Offline());
  auto changed = c.config;
  changed.leak.threshold = 0.5;
  CHECK(Resume(changed, Offline()).executed.empty());
}

TEST_CASE("a locked workspace refuses a second run") {
  auto c = MakeCorpus("lock");
  fs::create_directories(c.config.paths.workspace);
  {
    pas::io::FileLock held(c.config.paths.workspace / ".pas.lock");
    CHECK(KindOf([&] { RunPipeline(c.config, Offline()); }) == ErrorKind::kStage);
  }
  CHECK_NOTHROW(RunPipeline(c.config, Offline()));
}

TEST_CASE("target size prunes to the exact count") {
  auto c = MakeCorpus("target");
  auto config = c.config;
  config.target_size = 300;
  const auto result = RunPipeline(config, Offline());
  CHECK(result.retained.size() == 300);
  CHECK(result.report.halt_mode == "target_size");
  CHECK(pas::curation::TelescopeViolations(result.report).empty());

  config.target_size = 1'000'000;
  CHECK(KindOf([&] { RunPipeline(config, Offline()); }) == ErrorKind::kStage);
}

TEST_CASE("an empty pool yields an empty manifest and a warning") {
  auto c = MakeCorpus("empty");
  auto config = c.config;
  config.stages.retrieve = false;
  config.stages.synth = false;
  const auto result = RunPipeline(config, Offline());
  CHECK(result.retained.empty());
  CHECK(LineCount(result.workspace / "manifest.jsonl") == 0);
  bool warned = false;
  for (const auto& w : result.report.warnings) {
    warned = warned || w == "no records retained; the manifest is empty";
  }
  CHECK(warned);
}

TEST_CASE("stage failures surface as kStage") {
  auto c = MakeCorpus("fail");
  auto options = Offline();
  auto providers = MakeMockProviders(c.config);
  providers.ood = std::make_shared<BrokenOod>();
  options.providers = providers;
  try {
    RunPipeline(c.config, options);
    FAIL("expected a stage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kStage);
    CHECK(std::string(e.what()).find("stage score failed") != std::string::npos);
  }
  // Everything before the failure stays checkpointed.
  const Json cp = Json::parse(pas::io::ReadFile(c.config.paths.workspace / "checkpoints.json"));
  CHECK(cp["stages"]["leak"]["status"] == "done");
  CHECK(cp["stages"]["score"]["status"] == "pending");
}

TEST_CASE("manifest emission") {
  const auto dir = oracle::TempDir("emit");
  auto c = MakeCorpus("emit_cfg");
  std::vector<pas::acquisition::ImageRecord> records;
  for (int i = 0; i < 75; ++i) {
    pas::acquisition::ImageRecord r;
    r.uri = "mem://img/" + std::to_string(i);
    r.source = pas::acquisition::Source::kReal;
    r.concept_id = "c1";
    r.retrieval_similarity = 0.5;
    r.id = pas::acquisition::RealRecordId(r.uri);
    records.push_back(r);
  }
  EmitManifest(dir, records, Json{{"x", 1}}, c.config);
  CHECK(LineCount(dir / "manifest.jsonl") == 75);
  CHECK(pas::acquisition::ReadRecords(dir / "manifest.jsonl").size() == 75);
  CHECK(Json::parse(pas::io::ReadFile(dir / "report.json")) == Json{{"x", 1}});
  CHECK(fs::exists(dir / "config.lock.json"));
}
