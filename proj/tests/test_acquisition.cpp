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

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pas/acquisition.hpp"
#include "pas/error.hpp"
#include "pas/io.hpp"

using namespace pas::acquisition;
using pas::Error;
using pas::ErrorKind;
using pas::discovery::Concept;
using pas::discovery::DomainSpec;
using pas::gateway::CallbackChat;
using pas::gateway::ChatRequest;
using pas::gateway::HashEmbedder;
using pas::gateway::HashVector;
using pas::gateway::MockImageGen;

namespace {

const DomainSpec kFood{"food", "dishes"};

Concept MakeConcept(const std::string& text) {
  auto canonical = pas::discovery::CanonicalizeConcept(text);
  Concept c;
  c.key = canonical.key;
  c.text = canonical.display;
  c.id = pas::discovery::ConceptId(c.key);
  c.validated = pas::discovery::Validation::kAccepted;
  return c;
}

// Embeds known texts to fixed vectors.
class TableEmbedder final : public pas::gateway::EmbeddingProvider {
 public:
  TableEmbedder(std::string tag, std::map<std::string, std::vector<float>> table)
      : tag_(std::move(tag)), table_(std::move(table)) {}
  std::vector<pas::gateway::EmbedItemResult> EmbedChunk(std::span<const std::string> items) override {
    CountCall();
    std::vector<pas::gateway::EmbedItemResult> out;
    for (const auto& s : items) {
      auto it = table_.find(s);
      if (it == table_.end()) {
        out.push_back({{}, "unknown text " + s});
      } else {
        out.push_back({it->second, {}});
      }
    }
    return out;
  }
  std::string model_tag() const override { return tag_; }

 private:
  std::string tag_;
  std::map<std::string, std::vector<float>> table_;
};

std::vector<float> Axis(std::size_t dim, std::size_t i, float scale = 1.0f) {
  std::vector<float> v(dim, 0.0f);
  v[i] = scale;
  return v;
}

std::vector<CaptionSet> Captions(const std::vector<Concept>& concepts, std::size_t n_cap,
                                 std::size_t in_flight = 4) {
  pas::gateway::SyntheticDomainChat inner("captioner");
  CallbackChat chat("captioner", [&](const ChatRequest& r) { return inner.Complete(r); }, in_flight);
  AcquisitionConfig cfg;
  cfg.n_cap = n_cap;
  return GenerateAllCaptions(concepts, kFood, chat, cfg).sets;
}

std::string RecordBytes(const std::vector<ImageRecord>& records) {
  std::string out;
  for (const auto& r : records) out += ToJson(r).dump() + "\n";
  return out;
}

}  // namespace

TEST_CASE("record ids are stable and domain separated") {
  CHECK(RealRecordId("u") == RealRecordId("u"));
  CHECK(RealRecordId("u") != RealRecordId("v"));
  CHECK(SyntheticRecordId("p", 1, 0) != SyntheticRecordId("p", 1, 1));
  CHECK(SyntheticRecordId("p", 1, 0) != SyntheticRecordId("p", 2, 0));
  CHECK(RealRecordId("p") != SyntheticRecordId("p", 0, 0));
}

TEST_CASE("config defaults and validation") {
  AcquisitionConfig cfg;
  CHECK(cfg.per_concept_real == 500);
  CHECK(cfg.n_cap == 5);
  CHECK(cfg.n_synth == 35);
  CHECK(Violations(cfg).empty());
  cfg.n_cap = 0;
  cfg.caption_template = "no placeholder";
  CHECK(Violations(cfg).size() == 2);
}

TEST_CASE("record invariants") {
  ImageRecord real{"id", "uri", Source::kReal, "c", std::nullopt, 0.5};
  CHECK(Violations(real).empty());
  real.retrieval_similarity = 1.5;
  CHECK(Violations(real).size() == 1);
  real.retrieval_similarity.reset();
  CHECK(Violations(real).size() == 1);
  ImageRecord synth{"id", "uri", Source::kSynthetic, "c", std::nullopt, std::nullopt};
  CHECK(Violations(synth).size() == 1);
}

// ---------------------------------------------------------------------------
// Retrieval

TEST_CASE("planted paella images occupy the top ranks") {
  const std::size_t dim = 32;
  std::mt19937_64 rng(5);
  std::vector<std::string> ids;
  std::vector<float> raw;
  const auto paella = HashVector("paella", dim);
  for (int i = 0; i < 10; ++i) {
    const bool planted = i == 2 || i == 5 || i == 9;
    ids.push_back("img" + std::to_string(i));
    const auto noise = oracle::Gaussian(rng, dim);
    for (std::size_t d = 0; d < dim; ++d) {
      raw.push_back(planted ? paella[d] * static_cast<float>(1 + i) : noise[d]);
    }
  }
  auto store = pas::index::BuildStore(ids, raw, dim, "joint");
  HashEmbedder embedder("joint", dim);
  AcquisitionConfig cfg;
  cfg.per_concept_real = 5;
  auto hits = RetrieveForConcept(MakeConcept("Paella"), embedder, store, cfg);
  REQUIRE(hits.has_value());
  REQUIRE(hits->size() == 5);
  std::set<std::string> top3 = {(*hits)[0].uri, (*hits)[1].uri, (*hits)[2].uri};
  CHECK(top3 == std::set<std::string>{"img2", "img5", "img9"});
  for (int i = 0; i < 3; ++i) CHECK((*hits)[static_cast<std::size_t>(i)].retrieval_similarity.value() ==
                                    doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t i = 1; i < hits->size(); ++i) {
    CHECK(*(*hits)[i].retrieval_similarity <= *(*hits)[i - 1].retrieval_similarity);
  }
  for (const auto& r : *hits) {
    CHECK(r.source == Source::kReal);
    CHECK(r.id == RealRecordId(r.uri));
    CHECK(Violations(r).empty());
  }
}

TEST_CASE("retrieval preconditions") {
  const std::size_t dim = 8;
  std::vector<float> raw = HashVector("x", dim);
  auto store = pas::index::BuildStore({"a"}, raw, dim, "joint");
  HashEmbedder other("other", dim);
  try {
    RetrieveForConcept(MakeConcept("x"), other, store, {});
    FAIL("tag mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kStage);
  }
  auto empty = pas::index::BuildStore({}, std::span<const float>{}, dim, "joint");
  HashEmbedder joint("joint", dim);
  try {
    RetrieveAll({MakeConcept("x")}, joint, empty, {});
    FAIL("empty store accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kStage);
  }
  HashEmbedder wrong_dim("joint", dim + 1);
  CHECK_THROWS_AS(RetrieveForConcept(MakeConcept("x"), wrong_dim, store, {}), Error);
}

TEST_CASE("cross-concept duplicates collapse to the best linkage") {
  const std::size_t dim = 4;
  const auto alpha = MakeConcept("alpha"), beta = MakeConcept("beta");
  TableEmbedder embedder("joint", {{"alpha", Axis(dim, 0)}, {"beta", Axis(dim, 1)}});
  std::vector<float> raw;
  const std::vector<std::vector<float>> rows = {
      {1, 1, 0, 0},      // tie between alpha and beta
      {0.8f, 0.6f, 0, 0},  // alpha wins
      {0.6f, 0.8f, 0, 0},  // beta wins
      {0, 0, 1, 0},
  };
  for (const auto& r : rows) raw.insert(raw.end(), r.begin(), r.end());
  auto store = pas::index::BuildStore({"tie", "to_alpha", "to_beta", "far"}, raw, dim, "joint");
  AcquisitionConfig cfg;
  cfg.per_concept_real = 3;
  auto result = RetrieveAll({alpha, beta}, embedder, store, cfg);
  CHECK(result.raw_hits == 6);
  CHECK(result.collapsed == 3);
  REQUIRE(result.records.size() == 3);
  std::map<std::string, std::string> link;
  for (const auto& r : result.records) link[r.uri] = r.concept_id;
  CHECK(link["to_alpha"] == alpha.id);
  CHECK(link["to_beta"] == beta.id);
  CHECK(link["tie"] == std::min(alpha.id, beta.id));
  CHECK(std::is_sorted(result.records.begin(), result.records.end(),
                       [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; }));
}

TEST_CASE("retrieval over a bank matches a per-concept argsort oracle") {
  const std::size_t dim = 16, n = 400;
  std::mt19937_64 rng(77);
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("mock://img/" + std::to_string(i));
    rows.push_back(oracle::Normalized(oracle::Gaussian(rng, dim)));
  }
  auto store = pas::index::BuildStore(ids, oracle::Flatten(rows), dim, "joint");
  std::vector<Concept> concepts;
  for (int i = 0; i < 25; ++i) concepts.push_back(MakeConcept("Dish " + std::to_string(i)));
  HashEmbedder embedder("joint", dim);
  AcquisitionConfig cfg;
  cfg.per_concept_real = 30;
  auto result = RetrieveAll(concepts, embedder, store, cfg, 7);

  // Oracle: best (similarity, lowest concept id) per uri over each concept's top-k.
  std::vector<std::vector<float>> stored;
  for (std::size_t i = 0; i < n; ++i) stored.emplace_back(store.row(i).begin(), store.row(i).end());
  std::map<std::string, std::pair<double, std::string>> best;
  std::size_t raw_hits = 0;
  for (const auto& c : concepts) {
    const auto q = HashVector(c.key, dim);
    for (const auto& uri : oracle::ArgsortTopK(ids, stored, q, cfg.per_concept_real)) {
      ++raw_hits;
      const auto row = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), uri) - ids.begin());
      const double s = oracle::StoredSimilarity(stored[row], q);
      auto it = best.find(uri);
      if (it == best.end() || s > it->second.first ||
          (s == it->second.first && c.id < it->second.second)) {
        best[uri] = {s, c.id};
      }
    }
  }
  CHECK(result.raw_hits == raw_hits);
  REQUIRE(result.records.size() == best.size());
  for (const auto& r : result.records) {
    REQUIRE(best.count(r.uri));
    CHECK(r.concept_id == best[r.uri].second);
    CHECK(*r.retrieval_similarity == doctest::Approx(best[r.uri].first).epsilon(1e-9));
  }
}

TEST_CASE("embedder failures skip only the affected concepts") {
  const std::size_t dim = 8;
  auto store = pas::index::BuildStore({"a", "b"}, oracle::Flatten({HashVector("a", dim), HashVector("b", dim)}),
                                      dim, "joint");
  HashEmbedder embedder("joint", dim);
  embedder.FailWhen([](std::string_view s) { return s == "Broken"; });
  auto result = RetrieveAll({MakeConcept("Fine"), MakeConcept("Broken")}, embedder, store, {});
  CHECK(result.skipped_concepts == std::vector<std::string>{MakeConcept("Broken").id});
  CHECK(result.warnings.size() == 1);
  CHECK(result.records.size() == 2);
  CHECK_FALSE(RetrieveForConcept(MakeConcept("Broken"), embedder, store, {}).has_value());
}

// ---------------------------------------------------------------------------
// Captions

TEST_CASE("scripted captions are returned verbatim") {
  const auto c = MakeConcept("Canada Goose");
  AcquisitionConfig cfg;
  cfg.n_cap = 2;
  cfg.base_seed = 9;
  const std::string prompt = pas::discovery::RenderTemplate(cfg.caption_template, kFood, c.text);
  pas::gateway::ScriptedChat chat("captioner");
  chat.Add(CaptionSeed(9, c.key, 0), prompt,
           "A majestic Canada Goose spreads its wings, taking flight above the frozen lake.");
  chat.Add(CaptionSeed(9, c.key, 1), prompt, "\"A Canada Goose rests on a misty pond.\"");
  auto set = GenerateCaptions(c, kFood, chat, cfg);
  REQUIRE(set.has_value());
  CHECK(set->concept_id == c.id);
  CHECK(set->captions ==
        std::vector<std::string>{
            "A majestic Canada Goose spreads its wings, taking flight above the frozen lake.",
            "A Canada Goose rests on a misty pond."});
  CHECK(set->seeds == std::vector<std::int64_t>{CaptionSeed(9, c.key, 0), CaptionSeed(9, c.key, 1)});
}

TEST_CASE("empty or duplicate captions are re-sampled once") {
  const auto c = MakeConcept("Ramen");
  AcquisitionConfig cfg;
  cfg.n_cap = 3;
  std::map<std::int64_t, std::string> replies = {
      {CaptionSeed(0, c.key, 0), "Steaming ramen."},
      {CaptionSeed(0, c.key, 1), "Steaming ramen."},  // duplicate, retried at index 4
      {CaptionSeed(0, c.key, 4), "Ramen at a night stall."},
      {CaptionSeed(0, c.key, 2), ""},  // empty, retried at index 5
      {CaptionSeed(0, c.key, 5), "Steaming ramen."},  // duplicate after retry: kept
  };
  CallbackChat chat("captioner", [&](const ChatRequest& r) { return replies.at(r.seed); });
  auto set = GenerateCaptions(c, kFood, chat, cfg);
  REQUIRE(set.has_value());
  CHECK(set->captions ==
        std::vector<std::string>{"Steaming ramen.", "Ramen at a night stall.", "Steaming ramen."});
  CHECK(chat.calls() == 5);
  CHECK(std::set<std::int64_t>(set->seeds.begin(), set->seeds.end()).size() == 3);
}

TEST_CASE("caption provider failure skips the concept") {
  CallbackChat chat("captioner", [](const ChatRequest& r) -> std::string {
    if (r.subject == "Sushi") throw Error(ErrorKind::kTransport, "down");
    return "A plate of " + r.subject + ".";
  });
  auto result = GenerateAllCaptions({MakeConcept("Paella"), MakeConcept("Sushi")}, kFood, chat, {});
  CHECK(result.sets.size() == 1);
  CHECK(result.skipped_concepts == std::vector<std::string>{MakeConcept("Sushi").id});
}

// ---------------------------------------------------------------------------
// Synthesis

TEST_CASE("one caption with n_synth = 3 gives three stable records") {
  CaptionSet set{"cid", "paella", {"A pan of paella on a terrace."}, {1}};
  AcquisitionConfig cfg;
  cfg.n_synth = 3;
  MockImageGen gen;
  auto a = SynthesizeForCaptions(set, gen, cfg);
  auto b = SynthesizeForCaptions(set, gen, cfg);
  REQUIRE(a.records.size() == 3);
  CHECK(RecordBytes(a.records) == RecordBytes(b.records));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.records[i].id == SyntheticRecordId(set.captions[0], SynthSeed("paella", 0), i));
    CHECK(a.records[i].caption == set.captions[0]);
    CHECK(Violations(a.records[i]).empty());
  }
}

TEST_CASE("10 concepts x 2 captions x 4 images = 80 synthetic records") {
  std::vector<Concept> concepts;
  for (int i = 0; i < 10; ++i) concepts.push_back(MakeConcept("Dish " + std::to_string(i)));
  auto sets = Captions(concepts, 2);
  REQUIRE(sets.size() == 10);
  AcquisitionConfig cfg;
  cfg.n_cap = 2;
  cfg.n_synth = 4;
  MockImageGen gen;
  auto result = SynthesizeAll(sets, gen, cfg);
  CHECK(result.records.size() == 80);
  CHECK(result.failed_images == 0);
  CHECK(result.empty_concepts.empty());

  std::map<std::string, std::set<std::string>> captions_of;
  for (const auto& s : sets) captions_of[s.concept_id] = {s.captions.begin(), s.captions.end()};
  for (const auto& r : result.records) {
    REQUIRE(r.caption.has_value());
    CHECK(captions_of[r.concept_id].count(*r.caption) == 1);
  }
}

TEST_CASE("stage 2 is byte-identical across parallelism degrees") {
  std::vector<Concept> concepts;
  for (int i = 0; i < 12; ++i) concepts.push_back(MakeConcept("Dish " + std::to_string(i)));
  AcquisitionConfig cfg;
  cfg.n_cap = 3;
  cfg.n_synth = 2;
  MockImageGen gen;
  auto serial = SynthesizeAll(Captions(concepts, 3, 1), gen, cfg);
  auto parallel = SynthesizeAll(Captions(concepts, 3, 8), gen, cfg);
  CHECK(RecordBytes(serial.records) == RecordBytes(parallel.records));
}

TEST_CASE("partial synthesis is tolerated, empty concepts are reported") {
  CaptionSet set{"cid", "paella", {"one", "two"}, {1, 2}};
  AcquisitionConfig cfg;
  cfg.n_synth = 4;
  MockImageGen gen;
  gen.FailWhen([](std::string_view prompt, std::size_t i) { return prompt == "one" || i == 0; });
  auto partial = SynthesizeForCaptions(set, gen, cfg);
  CHECK(partial.records.size() == 3);
  CHECK(partial.failed_images == 5);
  CHECK(partial.empty_concepts.empty());

  gen.FailWhen([](std::string_view, std::size_t) { return true; });
  auto none = SynthesizeForCaptions(set, gen, cfg);
  CHECK(none.records.empty());
  CHECK(none.empty_concepts == std::vector<std::string>{"cid"});
}

// ---------------------------------------------------------------------------
// Merge and persistence

TEST_CASE("merge: real block first, each sorted by id") {
  auto real = [](const std::string& uri) {
    return ImageRecord{RealRecordId(uri), uri, Source::kReal, "c", std::nullopt, 0.5};
  };
  auto synth = [](std::size_t i) {
    return ImageRecord{SyntheticRecordId("p", 0, i), "s" + std::to_string(i), Source::kSynthetic,
                       "c", "p", std::nullopt};
  };
  auto merged = MergePools({real("b"), real("a")}, {synth(0), synth(1), synth(2)});
  REQUIRE(merged.size() == 5);
  CHECK(merged[0].source == Source::kReal);
  CHECK(merged[1].source == Source::kReal);
  CHECK(merged[0].id < merged[1].id);
  CHECK(merged[2].id < merged[3].id);
  CHECK(merged[3].id < merged[4].id);

  std::vector<ImageRecord> synth_only = {synth(2), synth(0), synth(1)};
  auto identity = MergePools({}, synth_only);
  std::sort(synth_only.begin(), synth_only.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
  CHECK(identity == synth_only);

  auto collide = synth(0);
  collide.id = real("a").id;
  try {
    MergePools({real("a")}, {collide});
    FAIL("collision accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIntegrity);
  }
}

TEST_CASE("records and caption sets round trip through JSONL") {
  const auto dir = oracle::TempDir("acq_rt");
  std::vector<ImageRecord> records = {
      {RealRecordId("u"), "u", Source::kReal, "c1", std::nullopt, -0.25},
      {SyntheticRecordId("p", 3, 0), "s", Source::kSynthetic, "c2", "p", std::nullopt},
  };
  WriteRecords(dir / "r.jsonl", records);
  CHECK(ReadRecords(dir / "r.jsonl") == records);

  std::vector<CaptionSet> sets = {{"c1", "k1", {"a", "b"}, {1, 2}}};
  WriteCaptionSets(dir / "c.jsonl", sets);
  auto back = ReadCaptionSets(dir / "c.jsonl");
  REQUIRE(back.size() == 1);
  CHECK(back[0].captions == sets[0].captions);
  CHECK(back[0].seeds == sets[0].seeds);

  pas::io::AtomicWrite(dir / "bad.jsonl",
                       R"({"id":"x","uri":"u","source":"synthetic","concept_id":"c"})" "\n");
  try {
    ReadRecords(dir / "bad.jsonl");
    FAIL("bad record accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFormat);
  }
}
