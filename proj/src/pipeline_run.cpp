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

#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>

#include "pas/error.hpp"
#include "pas/hashing.hpp"
#include "pas/io.hpp"
#include "pas/log.hpp"
#include "pas/pipeline.hpp"

namespace pas::pipeline {

using acquisition::ImageRecord;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCheckpoints = "checkpoints.json";
constexpr const char* kLockFile = ".pas.lock";

std::string BankFile(Stage stage) {
  switch (stage) {
    case Stage::kConcepts: return "concepts.initial.jsonl";
    case Stage::kExpand: return "concepts.expanded.jsonl";
    default: return "concepts.validated.jsonl";
  }
}

Json ReadJson(const fs::path& path) {
  try {
    return Json::parse(io::ReadFile(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

std::size_t RoleBatch(const PipelineConfig& config, const char* role) {
  auto it = config.providers.find(role);
  return it == config.providers.end() ? 64 : it->second.batch_size;
}

template <typename T>
T& RequireRole(const std::shared_ptr<T>& p, std::string_view role) {
  if (!p) throw Error(ErrorKind::kConfig, "no provider for role " + std::string(role));
  return *p;
}

}  // namespace

std::vector<std::string> StageOutputs(Stage stage) {
  switch (stage) {
    case Stage::kConcepts:
    case Stage::kExpand:
    case Stage::kValidate: {
      const std::string bank = BankFile(stage);
      return {bank, bank + ".meta.json"};
    }
    case Stage::kRetrieve: return {"real.jsonl", "retrieve.stats.json"};
    case Stage::kCaptions: return {"captions.jsonl", "captions.stats.json"};
    case Stage::kSynth: return {"synth.jsonl", "synth.stats.json"};
    case Stage::kMerge: return {"pool.jsonl"};
    case Stage::kDedup:
      return {"dedup.jsonl", "dedup.stats.json", "copy.emb", "copy.emb.ids", "copy.emb.meta.json"};
    case Stage::kLeak: return {"leak.jsonl", "leak.stats.json"};
    case Stage::kScore: return {"scores.jsonl", "general_bank.json"};
    case Stage::kPrune: return {"retained.jsonl", "prune.stats.json"};
    case Stage::kManifest: return {"manifest.jsonl", "report.json", "config.lock.json"};
  }
  return {};
}

std::size_t ProviderSet::total_calls() const {
  std::set<const gateway::CallCounted*> seen{chat.get(),       validator.get(),
                                             captioner.get(),  text_embed.get(),
                                             image_embed.get(), image_gen.get(), ood.get()};
  std::size_t total = 0;
  for (auto* p : seen) {
    if (p) total += p->calls();
  }
  return total;
}

ProviderSet MakeMockProviders(const PipelineConfig& config) {
  gateway::SyntheticDomainOptions options;
  options.vocabulary_size = config.mock.vocabulary_size;
  ProviderSet set;
  set.chat = std::make_shared<gateway::SyntheticDomainChat>("mock-generator", options);
  set.validator = std::make_shared<gateway::SyntheticDomainChat>("mock-validator", options);
  set.captioner = set.chat;
  set.text_embed =
      std::make_shared<gateway::HashEmbedder>(config.mock.text_model_tag, config.mock.text_dim);
  set.image_embed =
      std::make_shared<gateway::HashEmbedder>(config.mock.copy_model_tag, config.mock.copy_dim);
  set.image_gen = std::make_shared<gateway::MockImageGen>();
  set.ood = std::make_shared<gateway::MockOod>();
  return set;
}

ProviderSet MakeHttpProviders(const PipelineConfig& config,
                              std::shared_ptr<gateway::Transport> transport) {
  if (!transport) transport = std::make_shared<gateway::HttplibTransport>();
  auto endpoint = [&](const char* role) -> const gateway::ProviderEndpoint* {
    auto it = config.providers.find(role);
    return it == config.providers.end() ? nullptr : &it->second;
  };
  ProviderSet set;
  if (auto* e = endpoint("chat")) set.chat = std::make_shared<gateway::HttpChatProvider>(*e, transport);
  if (auto* e = endpoint("validator")) {
    set.validator = std::make_shared<gateway::HttpChatProvider>(*e, transport);
  }
  if (auto* e = endpoint("captioner")) {
    set.captioner = std::make_shared<gateway::HttpChatProvider>(*e, transport);
  } else {
    set.captioner = set.chat;
  }
  if (auto* e = endpoint("text_embed")) {
    set.text_embed = std::make_shared<gateway::HttpEmbeddingProvider>(*e, transport);
  }
  if (auto* e = endpoint("image_embed")) {
    set.image_embed = std::make_shared<gateway::HttpEmbeddingProvider>(*e, transport);
  }
  if (auto* e = endpoint("image_gen")) {
    set.image_gen = std::make_shared<gateway::HttpImageGenProvider>(*e, transport);
  }
  if (auto* e = endpoint("ood_prob")) {
    set.ood = std::make_shared<gateway::HttpOodProvider>(*e, transport);
  }
  return set;
}

void EmitManifest(const fs::path& workspace, const std::vector<ImageRecord>& records,
                  const Json& report, const PipelineConfig& config) {
  try {
    acquisition::WriteRecords(workspace / "manifest.jsonl", records);
    io::AtomicWrite(workspace / "report.json", io::DumpPretty(report));
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    Json lock = {{"engine_version", kEngineVersion},
                 {"created_at", stamp},
                 {"config", ConfigToJson(config, true)}};
    io::AtomicWrite(workspace / "config.lock.json", io::DumpPretty(lock));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw Error(ErrorKind::kStage, e.what());
    throw;
  }
}

// Copy-detection vectors for every pooled record, keyed by record id:
// taken from the configured copy store by uri, otherwise embedded.
index::EmbeddingStore BuildCopyStore(const std::vector<ImageRecord>& pool,
                                     const PipelineConfig& config, const ProviderSet& providers) {
  std::optional<index::EmbeddingStore> given;
  if (config.paths.copy_store) given = index::LoadStore(*config.paths.copy_store);

  std::vector<std::optional<std::vector<float>>> vectors(pool.size());
  std::vector<std::size_t> missing;
  std::vector<std::string> uris;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (given) {
      if (auto row = given->find(pool[i].uri)) {
        auto r = given->row(*row);
        vectors[i] = std::vector<float>(r.begin(), r.end());
        continue;
      }
    }
    missing.push_back(i);
    uris.push_back(pool[i].uri);
  }
  std::string tag = given ? given->model_tag() : std::string();
  if (!missing.empty()) {
    auto& embedder = RequireRole(providers.image_embed, "image_embed");
    if (tag.empty()) tag = embedder.model_tag();
    auto embedded = gateway::EmbedBatch(embedder, uris, RoleBatch(config, "image_embed"));
    std::size_t failures = 0;
    for (std::size_t k = 0; k < missing.size(); ++k) {
      if (!embedded[k].ok()) {
        ++failures;
        continue;
      }
      vectors[missing[k]] = std::move(embedded[k].vector);
    }
    if (failures > 0) {
      throw Error(ErrorKind::kStage,
                  std::to_string(failures) + " images could not be embedded for copy detection");
    }
  }
  std::size_t dim = 0;
  for (const auto& v : vectors) {
    if (v) {
      dim = v->size();
      break;
    }
  }
  std::vector<std::string> ids;
  std::vector<float> raw;
  ids.reserve(pool.size());
  raw.reserve(pool.size() * dim);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (vectors[i]->size() != dim) {
      throw Error(ErrorKind::kStage, "copy-detection vectors have inconsistent dimensions");
    }
    ids.push_back(pool[i].id);
    raw.insert(raw.end(), vectors[i]->begin(), vectors[i]->end());
  }
  return index::BuildStore(std::move(ids), raw, dim, tag);
}

index::EmbeddingStore ProtectedStore(const PipelineConfig& config) {
  std::vector<std::string> ids;
  std::vector<float> values;
  std::size_t dim = 0;
  std::string tag;
  for (std::size_t s = 0; s < config.paths.protected_stores.size(); ++s) {
    const auto store = index::LoadStore(config.paths.protected_stores[s]);
    if (store.empty()) continue;
    if (dim != 0 && store.dim() != dim) {
      throw Error(ErrorKind::kStage, "protected stores have different dimensions");
    }
    dim = store.dim();
    tag = store.model_tag();
    for (std::size_t i = 0; i < store.size(); ++i) ids.push_back(std::to_string(s) + ":" + store.id(i));
    auto v = store.values();
    values.insert(values.end(), v.begin(), v.end());
  }
  if (ids.empty()) return {};
  return index::FromNormalized(std::move(ids), std::move(values), dim, tag);
}

std::vector<std::string> GeneralBank(const PipelineConfig& config, const ProviderSet& providers) {
  if (!config.ood.general_concepts.empty()) return config.ood.general_concepts;
  gateway::ChatRequest request;
  request.messages.push_back(
      {gateway::Role::kUser,
       discovery::RenderTemplate(config.ood.general_bank_template, config.domain)});
  request.seed = config.base_seed;
  request.temperature = 0.0;
  request.task = gateway::ChatTask::kGeneralBank;
  const auto reply = gateway::ChatComplete(RequireRole(providers.chat, "chat"), request);
  std::vector<std::string> bank;
  std::set<std::string> keys;
  for (const auto& item : gateway::ParseConceptList(reply).items) {
    if (auto c = discovery::TryCanonicalize(item); c && keys.insert(c->key).second) {
      bank.push_back(c->display);
    }
  }
  if (auto c = discovery::TryCanonicalize(config.domain.name); c && keys.insert(c->key).second) {
    bank.push_back(c->display);
  }
  if (bank.size() < 2) throw Error(ErrorKind::kStage, "general concept bank is too small");
  return bank;
}


namespace {

class Runner {
 public:
  Runner(const PipelineConfig& config, const RunOptions& options)
      : config_(config), options_(options), ws_(config.paths.workspace) {}

  RunResult Run() {
    const bool offline = options_.offline.value_or(gateway::OfflineFromEnv());
    if (auto v = ValidateConfig(config_, offline); !v.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& s : v) msg += "\n  - " + s;
      throw Error(ErrorKind::kConfig, msg);
    }
    fs::create_directories(ws_);
    io::FileLock lock(ws_ / kLockFile);

    if (options_.providers) {
      providers_ = *options_.providers;
    } else if (offline) {
      providers_ = MakeMockProviders(config_);
    } else {
      providers_ = MakeHttpProviders(config_, options_.transport);
    }

    if (options_.resume && fs::exists(ws_ / kCheckpoints)) {
      LoadCheckpoints();
    } else {
      Reset();
    }

    RunResult result;
    result.workspace = ws_;
    for (auto stage : kAllStages) {
      const std::string name(ToString(stage));
      if (checkpoints_["stages"][name].value("status", "pending") == "done") {
        Verify(stage);
        continue;
      }
      Log()->info("stage {} started", name);
      try {
        RunStage(stage);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kConfig || e.kind() == ErrorKind::kCorruption) throw;
        throw Error(ErrorKind::kStage, "stage " + name + " failed: " + e.what());
      } catch (const std::exception& e) {
        throw Error(ErrorKind::kStage, "stage " + name + " failed: " + e.what());
      }
      if (options_.on_stage) options_.on_stage(stage, StageEvent::kBeforeCheckpoint);
      MarkDone(stage);
      if (options_.on_stage) options_.on_stage(stage, StageEvent::kAfterCheckpoint);
      result.executed.push_back(stage);
    }
    result.retained = acquisition::ReadRecords(ws_ / "manifest.jsonl");
    result.report = curation::ReportFromJson(ReadJson(ws_ / "report.json").at("curation"));
    return result;
  }

 private:
  std::string ConfigDigest() const { return Sha256Hex(ConfigToJson(config_, true).dump()); }

  void Reset() {
    for (auto stage : kAllStages) {
      for (const auto& f : StageOutputs(stage)) fs::remove(ws_ / f);
    }
    checkpoints_ = Json{{"engine_version", kEngineVersion},
                        {"config_digest", ConfigDigest()},
                        {"stages", Json::object()}};
    for (auto stage : kAllStages) {
      checkpoints_["stages"][std::string(ToString(stage))] = {{"status", "pending"}};
    }
    io::AtomicWrite(ws_ / kCheckpoints, io::DumpPretty(checkpoints_));
  }

  void LoadCheckpoints() {
    try {
      checkpoints_ = Json::parse(io::ReadFile(ws_ / kCheckpoints));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::kCorruption, "unreadable checkpoint file: " + std::string(e.what()));
    }
    if (!checkpoints_.is_object() || !checkpoints_.contains("stages") ||
        !checkpoints_["stages"].is_object()) {
      throw Error(ErrorKind::kCorruption, "checkpoint file has no stage table");
    }
    if (checkpoints_.value("config_digest", "") != ConfigDigest()) {
      Log()->warn("configuration changed since the workspace was created; resuming anyway");
    }
    bool pending_seen = false;
    for (auto stage : kAllStages) {
      const std::string name(ToString(stage));
      auto& entry = checkpoints_["stages"][name];
      if (!entry.is_object()) entry = {{"status", "pending"}};
      const bool done = entry.value("status", "pending") == "done";
      if (done && pending_seen) {
        throw Error(ErrorKind::kCorruption,
                    "stage " + name + " is marked done after a pending predecessor");
      }
      pending_seen = pending_seen || !done;
    }
  }

  void Verify(Stage stage) {
    const std::string name(ToString(stage));
    const auto& digests = checkpoints_["stages"][name]["digests"];
    for (const auto& f : StageOutputs(stage)) {
      const fs::path path = ws_ / f;
      if (!fs::exists(path)) {
        throw Error(ErrorKind::kCorruption, "stage " + name + ": output " + f + " is missing");
      }
      if (!digests.contains(f) || digests[f].get<std::string>() != Sha256Hex(io::ReadFile(path))) {
        throw Error(ErrorKind::kCorruption, "stage " + name + ": digest mismatch for " + f);
      }
    }
  }

  void MarkDone(Stage stage) {
    Json digests = Json::object();
    for (const auto& f : StageOutputs(stage)) digests[f] = Sha256Hex(io::ReadFile(ws_ / f));
    checkpoints_["stages"][std::string(ToString(stage))] = {{"status", "done"},
                                                            {"digests", digests}};
    io::AtomicWrite(ws_ / kCheckpoints, io::DumpPretty(checkpoints_));
  }

  std::size_t BatchFor(const char* role) const { return RoleBatch(config_, role); }

  template <typename T>
  T& Require(const std::shared_ptr<T>& p, std::string_view role) const {
    return RequireRole(p, role);
  }

  std::vector<discovery::Concept> Accepted() const {
    return discovery::ReadBank(ws_ / BankFile(Stage::kValidate)).accepted();
  }

  void WriteStats(const std::string& file, const Json& stats) {
    io::AtomicWrite(ws_ / file, io::DumpPretty(stats));
  }

  void RunStage(Stage stage) {
    switch (stage) {
      case Stage::kConcepts: {
        auto bank = discovery::GenerateInitialConcepts(
            config_.domain, Require(providers_.chat, "chat"), config_.discovery);
        discovery::WriteBank(ws_ / BankFile(stage), bank);
        break;
      }
      case Stage::kExpand: {
        auto bank = discovery::ReadBank(ws_ / BankFile(Stage::kConcepts));
        bank = discovery::ExpandConcepts(std::move(bank), Require(providers_.chat, "chat"),
                                         config_.discovery);
        discovery::WriteBank(ws_ / BankFile(stage), bank);
        break;
      }
      case Stage::kValidate: {
        auto bank = discovery::ReadBank(ws_ / BankFile(Stage::kExpand));
        bank = discovery::ValidateConcepts(std::move(bank),
                                           Require(providers_.validator, "validator"),
                                           config_.discovery);
        if (bank.log.accepted == 0) {
          throw Error(ErrorKind::kStage, "the validator accepted no concepts");
        }
        discovery::WriteBank(ws_ / BankFile(stage), bank);
        break;
      }
      case Stage::kRetrieve: RunRetrieve(); break;
      case Stage::kCaptions: RunCaptions(); break;
      case Stage::kSynth: RunSynth(); break;
      case Stage::kMerge: {
        auto merged = acquisition::MergePools(acquisition::ReadRecords(ws_ / "real.jsonl"),
                                              acquisition::ReadRecords(ws_ / "synth.jsonl"));
        acquisition::WriteRecords(ws_ / "pool.jsonl", merged);
        break;
      }
      case Stage::kDedup: RunDedup(); break;
      case Stage::kLeak: RunLeak(); break;
      case Stage::kScore: RunScore(); break;
      case Stage::kPrune: RunPrune(); break;
      case Stage::kManifest: RunManifest(); break;
    }
  }

  void RunRetrieve() {
    Json stats = {{"enabled", config_.stages.retrieve}};
    std::vector<ImageRecord> records;
    if (config_.stages.retrieve) {
      const auto store = index::LoadStore(*config_.paths.image_store);
      auto result = acquisition::RetrieveAll(Accepted(), Require(providers_.text_embed, "text_embed"),
                                             store, config_.acquisition, BatchFor("text_embed"));
      stats["raw_hits"] = result.raw_hits;
      stats["collapsed_cross_concept"] = result.collapsed;
      stats["skipped_concepts"] = result.skipped_concepts;
      stats["warnings"] = result.warnings;
      records = std::move(result.records);
    }
    acquisition::WriteRecords(ws_ / "real.jsonl", records);
    WriteStats("retrieve.stats.json", stats);
  }

  void RunCaptions() {
    Json stats = {{"enabled", config_.stages.synth}};
    std::vector<acquisition::CaptionSet> sets;
    if (config_.stages.synth) {
      auto result = acquisition::GenerateAllCaptions(
          Accepted(), config_.domain, Require(providers_.captioner, "captioner"),
          config_.acquisition);
      stats["skipped_concepts"] = result.skipped_concepts;
      sets = std::move(result.sets);
    }
    acquisition::WriteCaptionSets(ws_ / "captions.jsonl", sets);
    WriteStats("captions.stats.json", stats);
  }

  void RunSynth() {
    Json stats = {{"enabled", config_.stages.synth}};
    std::vector<ImageRecord> records;
    if (config_.stages.synth) {
      auto result = acquisition::SynthesizeAll(acquisition::ReadCaptionSets(ws_ / "captions.jsonl"),
                                               Require(providers_.image_gen, "image_gen"),
                                               config_.acquisition);
      stats["failed_images"] = result.failed_images;
      stats["empty_concepts"] = result.empty_concepts;
      records = std::move(result.records);
    }
    acquisition::WriteRecords(ws_ / "synth.jsonl", records);
    WriteStats("synth.stats.json", stats);
  }

  void RunDedup() {
    const auto pool = acquisition::ReadRecords(ws_ / "pool.jsonl");
    const bool needs_vectors = config_.stages.dedup || config_.stages.leak;
    index::EmbeddingStore copies;
    if (needs_vectors && !pool.empty()) copies = pipeline::BuildCopyStore(pool, config_, providers_);
    index::SaveStore(copies, ws_ / "copy.emb");

    Json stats = {{"enabled", config_.stages.dedup}};
    std::vector<ImageRecord> kept = pool;
    if (config_.stages.dedup) {
      auto result = curation::Dedup(pool, copies, config_.dedup);
      Json sizes = Json::object();
      for (const auto& [size, count] : result.component_sizes) sizes[std::to_string(size)] = count;
      stats["removed"] = result.removed.size();
      stats["component_sizes"] = sizes;
      kept = std::move(result.kept);
    }
    acquisition::WriteRecords(ws_ / "dedup.jsonl", kept);
    WriteStats("dedup.stats.json", stats);
  }

  void RunLeak() {
    const auto records = acquisition::ReadRecords(ws_ / "dedup.jsonl");
    Json stats = {{"enabled", config_.stages.leak}, {"warnings", Json::array()}};
    std::vector<ImageRecord> kept = records;
    if (config_.stages.leak) {
      const auto protected_store = pipeline::ProtectedStore(config_);
      if (protected_store.empty()) {
        stats["warnings"].push_back("no protected vectors; leak filter skipped");
        Log()->warn("no protected vectors; leak filter skipped");
      } else if (!records.empty()) {
        const auto copies = index::LoadStore(ws_ / "copy.emb");
        auto result = curation::LeakFilter(records, copies, protected_store, config_.leak);
        stats["removed"] = result.removed.size();
        for (const auto& w : result.warnings) stats["warnings"].push_back(w);
        kept = std::move(result.kept);
      }
    }
    acquisition::WriteRecords(ws_ / "leak.jsonl", kept);
    WriteStats("leak.stats.json", stats);
  }

  void RunScore() {
    const auto records = acquisition::ReadRecords(ws_ / "leak.jsonl");
    std::vector<curation::OODTriple> triples;
    curation::ParetoAssignment assignment;
    Json general = Json::array();
    if (config_.stages.score && !records.empty()) {
      std::vector<std::string> bank;
      for (const auto& c : Accepted()) bank.push_back(c.text);
      const auto general_bank = pipeline::GeneralBank(config_, providers_);
      general = general_bank;
      triples = curation::ScoreRecords(records, bank, general_bank, Require(providers_.ood, "ood_prob"),
                                       config_.ood.batch_size);
      assignment = curation::PeelFronts(triples);
    }
    curation::WriteScores(ws_ / "scores.jsonl", triples, assignment);
    io::AtomicWrite(ws_ / "general_bank.json", io::DumpPretty(general));
  }

  void RunPrune() {
    const auto records = acquisition::ReadRecords(ws_ / "leak.jsonl");
    const auto table = curation::ReadScores(ws_ / "scores.jsonl");
    Json knees = Json::object();
    for (auto m : {curation::Metric::kPrimary, curation::Metric::kGeneral,
                   curation::Metric::kTextDelta}) {
      knees[std::string(curation::ToString(m))] = nullptr;
    }
    Json stats = {{"fronts", table.assignment.fronts.size()},
                  {"halt_mode", "none"},
                  {"halt_front", nullptr},
                  {"knees", knees},
                  {"warnings", Json::array()}};
    std::vector<ImageRecord> kept = records;

    if (!config_.stages.score) {
      if (config_.target_size) stats["warnings"].push_back("scoring disabled; target_size ignored");
    } else if (config_.target_size) {
      if (*config_.target_size > records.size()) {
        throw Error(ErrorKind::kStage, "target_size " + std::to_string(*config_.target_size) +
                                           " exceeds the " + std::to_string(records.size()) +
                                           " records left after filtering");
      }
      kept = curation::PruneToSize(table.assignment, records, table.triples, *config_.target_size);
      stats["halt_mode"] = "target_size";
    } else if (!records.empty()) {
      auto decision = curation::SelectHalt(table.assignment, table.triples,
                                           config_.ood.kneedle_sensitivity);
      for (auto m : {curation::Metric::kPrimary, curation::Metric::kGeneral,
                     curation::Metric::kTextDelta}) {
        const auto& k = decision.knees[static_cast<std::size_t>(m)];
        stats["knees"][std::string(curation::ToString(m))] = k ? Json(*k) : Json(nullptr);
      }
      for (const auto& w : decision.warnings) {
        stats["warnings"].push_back(w);
        Log()->warn("{}", w);
      }
      if (decision.halt_front) {
        stats["halt_mode"] = "kneedle";
        stats["halt_front"] = *decision.halt_front;
      }
      kept = curation::RemoveFronts(table.assignment, records, decision.halt_front);
    }
    acquisition::WriteRecords(ws_ / "retained.jsonl", kept);
    WriteStats("prune.stats.json", stats);
  }

  void RunManifest() {
    const auto pool = acquisition::ReadRecords(ws_ / "pool.jsonl");
    const auto after_dedup = acquisition::ReadRecords(ws_ / "dedup.jsonl");
    const auto after_leak = acquisition::ReadRecords(ws_ / "leak.jsonl");
    const auto retained = acquisition::ReadRecords(ws_ / "retained.jsonl");
    const Json dedup = ReadJson(ws_ / "dedup.stats.json");
    const Json leak = ReadJson(ws_ / "leak.stats.json");
    const Json prune = ReadJson(ws_ / "prune.stats.json");

    curation::CurationReport r;
    r.raw = curation::CountBySource(pool);
    r.after_dedup = curation::CountBySource(after_dedup);
    r.after_leak = curation::CountBySource(after_leak);
    r.after_pareto = curation::CountBySource(retained);
    r.removed_dedup = pool.size() - after_dedup.size();
    r.removed_leak = after_dedup.size() - after_leak.size();
    r.removed_pareto = after_leak.size() - retained.size();
    r.retained = retained.size();
    const Json sizes = dedup.value("component_sizes", Json::object());
    for (const auto& [size, count] : sizes.items()) {
      r.duplicate_component_sizes[std::stoul(size)] = count.get<std::size_t>();
    }
    r.fronts = prune.at("fronts").get<std::size_t>();
    for (auto m : {curation::Metric::kPrimary, curation::Metric::kGeneral,
                   curation::Metric::kTextDelta}) {
      const auto& k = prune.at("knees").at(std::string(curation::ToString(m)));
      if (!k.is_null()) r.knees[static_cast<std::size_t>(m)] = k.get<double>();
    }
    if (!prune.at("halt_front").is_null()) r.halt_front = prune["halt_front"].get<std::size_t>();
    r.halt_mode = prune.at("halt_mode").get<std::string>();
    r.target_size = config_.target_size;
    for (const auto& w : leak.value("warnings", Json::array())) r.warnings.push_back(w);
    for (const auto& w : prune.value("warnings", Json::array())) r.warnings.push_back(w);
    if (retained.empty()) {
      r.warnings.push_back("no records retained; the manifest is empty");
      Log()->error("no records retained; the manifest is empty");
    }
    if (auto v = curation::TelescopeViolations(r); !v.empty()) {
      throw Error(ErrorKind::kStage, "report does not reconcile: " + v.front());
    }

    const auto bank = discovery::ReadBank(ws_ / BankFile(Stage::kValidate));
    std::size_t generated = 0;
    for (const auto& c : bank.concepts) {
      if (c.origin == discovery::ConceptOrigin::kGenerated) ++generated;
    }
    Json rounds = Json::array();
    for (const auto& round : bank.log.rounds) {
      rounds.push_back({{"phase", round.phase}, {"round", round.round}, {"gain", round.gain},
                        {"size_before", round.size_before}});
    }
    Json report = {
        {"engine_version", kEngineVersion},
        {"domain", {{"name", config_.domain.name}, {"description", config_.domain.description}}},
        {"discovery",
         {{"generated", generated},
          {"expanded", bank.concepts.size() - generated},
          {"accepted", bank.log.accepted},
          {"rejected", bank.log.rejected},
          {"unparseable_verdicts", bank.log.unparseable_verdicts},
          {"skipped_expansions", bank.log.skipped_expansions},
          {"rounds", rounds},
          {"warnings", bank.log.warnings}}},
        {"acquisition",
         {{"retrieval", ReadJson(ws_ / "retrieve.stats.json")},
          {"captions", ReadJson(ws_ / "captions.stats.json")},
          {"synthesis", ReadJson(ws_ / "synth.stats.json")}}},
        {"curation", curation::ToJson(r)}};
    EmitManifest(ws_, retained, report, config_);
  }

  const PipelineConfig& config_;
  const RunOptions& options_;
  fs::path ws_;
  ProviderSet providers_;
  Json checkpoints_;
};

}  // namespace

RunResult RunPipeline(const PipelineConfig& config, const RunOptions& options) {
  return Runner(config, options).Run();
}

RunResult Resume(const PipelineConfig& config, RunOptions options) {
  options.resume = true;
  return Runner(config, options).Run();
}

}  // namespace pas::pipeline
