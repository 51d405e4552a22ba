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
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pas/acquisition.hpp"
#include "pas/concept_discovery.hpp"
#include "pas/curation.hpp"
#include "pas/embedding_index.hpp"
#include "pas/error.hpp"
#include "pas/io.hpp"
#include "pas/model_gateway.hpp"
#include "pas/pipeline.hpp"

namespace {

using Json = nlohmann::json;
using pas::Error;
using pas::ErrorKind;
using pas::acquisition::ImageRecord;
using pas::pipeline::PipelineConfig;
using pas::pipeline::ProviderSet;

struct Common {
  std::string config;
  bool offline = false;
  std::optional<std::int64_t> seed;
  std::optional<std::string> domain_name;
  std::optional<std::string> domain_desc;
  std::optional<std::size_t> per_concept;
  std::optional<std::size_t> n_synth;
  std::optional<double> lambda_dup;
  std::optional<double> leak_threshold;

  bool Offline() const { return offline || pas::gateway::OfflineFromEnv(); }
};

PipelineConfig Load(const Common& common) {
  if (common.config.empty()) throw Error(ErrorKind::kConfig, "--config is required");
  auto config = pas::pipeline::LoadConfig(common.config);
  if (common.seed) config.ApplySeed(*common.seed);
  if (common.domain_name) config.domain.name = *common.domain_name;
  if (common.domain_desc) config.domain.description = *common.domain_desc;
  if (common.per_concept) config.acquisition.per_concept_real = *common.per_concept;
  if (common.n_synth) config.acquisition.n_synth = *common.n_synth;
  if (common.lambda_dup) config.dedup.lambda_dup = *common.lambda_dup;
  if (common.leak_threshold) config.leak.threshold = *common.leak_threshold;
  if (auto v = pas::pipeline::ValidateConfig(config, common.Offline()); !v.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& s : v) msg += "\n  - " + s;
    throw Error(ErrorKind::kConfig, msg);
  }
  return config;
}

ProviderSet Providers(const PipelineConfig& config, const Common& common) {
  if (common.Offline()) return pas::pipeline::MakeMockProviders(config);
  return pas::pipeline::MakeHttpProviders(config,
                                          std::make_shared<pas::gateway::HttplibTransport>());
}

template <typename T>
T& Need(const std::shared_ptr<T>& p, const char* role) {
  if (!p) throw Error(ErrorKind::kConfig, std::string("no provider for role ") + role);
  return *p;
}

std::size_t Batch(const PipelineConfig& config, const char* role) {
  auto it = config.providers.find(role);
  return it == config.providers.end() ? 64 : it->second.batch_size;
}

void Print(const Json& j) { std::cout << j.dump(2) << "\n"; }

void AddCommon(CLI::App* cmd, Common& common, bool seed = true) {
  cmd->add_option("--config", common.config, "pipeline config (JSON)")->check(CLI::ExistingFile);
  cmd->add_flag("--offline", common.offline, "use built-in mock providers");
  if (seed) cmd->add_option("--seed", common.seed, "override base_seed");
}

Json BankSummary(const pas::discovery::ConceptBank& bank) {
  return {{"phase", pas::discovery::ToString(bank.phase)},
          {"concepts", bank.concepts.size()},
          {"accepted", bank.log.accepted},
          {"rejected", bank.log.rejected},
          {"rounds", bank.log.rounds.size()}};
}

// A PASEMB1 matrix, or text with one vector per line (numbers separated by
// spaces or commas; brackets ignored).
pas::index::RawMatrix ReadVectors(const std::string& path) {
  const std::string text = pas::io::ReadFile(path);
  if (text.rfind(std::string("PASEMB1\0", 8), 0) == 0) return pas::index::ReadMatrix(path);
  pas::index::RawMatrix m;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    for (char& c : line) {
      if (c == ',' || c == '[' || c == ']') c = ' ';
    }
    std::istringstream fields(line);
    std::vector<float> row;
    float x = 0.0f;
    while (fields >> x) row.push_back(x);
    if (!fields.eof()) {
      throw Error(ErrorKind::kFormat, path + ":" + std::to_string(lineno) + ": not a number");
    }
    if (row.empty()) continue;
    if (m.count == 0) m.dim = row.size();
    if (row.size() != m.dim) {
      throw Error(ErrorKind::kFormat, path + ":" + std::to_string(lineno) + ": expected " +
                                          std::to_string(m.dim) + " values");
    }
    m.values.insert(m.values.end(), row.begin(), row.end());
    ++m.count;
  }
  return m;
}

// ---------------------------------------------------------------------------

void SetupConcepts(CLI::App& app, Common& common) {
  auto* concepts = app.add_subcommand("concepts", "concept discovery");
  concepts->require_subcommand(1);
  static std::string in, out;

  auto* generate = concepts->add_subcommand("generate", "generate the initial concept bank");
  AddCommon(generate, common);
  generate->add_option("--domain-name", common.domain_name, "override domain.name");
  generate->add_option("--domain-desc", common.domain_desc, "override domain.description");
  generate->add_option("--out", out, "bank file (JSONL)")->required();
  generate->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    auto bank = pas::discovery::GenerateInitialConcepts(config.domain, Need(providers.chat, "chat"),
                                                        config.discovery);
    pas::discovery::WriteBank(out, bank);
    Print(BankSummary(bank));
  });

  auto* expand = concepts->add_subcommand("expand", "expand an initial bank");
  AddCommon(expand, common);
  expand->add_option("--domain-name", common.domain_name, "override domain.name");
  expand->add_option("--domain-desc", common.domain_desc, "override domain.description");
  expand->add_option("--in", in, "initial bank")->required()->check(CLI::ExistingFile);
  expand->add_option("--out", out, "expanded bank")->required();
  expand->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    auto bank = pas::discovery::ExpandConcepts(pas::discovery::ReadBank(in),
                                               Need(providers.chat, "chat"), config.discovery);
    pas::discovery::WriteBank(out, bank);
    Print(BankSummary(bank));
  });

  auto* validate = concepts->add_subcommand("validate", "validate an expanded bank");
  AddCommon(validate, common);
  validate->add_option("--domain-name", common.domain_name, "override domain.name");
  validate->add_option("--domain-desc", common.domain_desc, "override domain.description");
  validate->add_option("--in", in, "expanded bank")->required()->check(CLI::ExistingFile);
  validate->add_option("--out", out, "validated bank")->required();
  validate->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    auto bank = pas::discovery::ValidateConcepts(pas::discovery::ReadBank(in),
                                                 Need(providers.validator, "validator"),
                                                 config.discovery);
    pas::discovery::WriteBank(out, bank);
    Print(BankSummary(bank));
  });
}

void SetupIndex(CLI::App& app, Common& common) {
  auto* index = app.add_subcommand("index", "embedding stores");
  index->require_subcommand(1);
  static std::string input, store_path, model_tag, id, text;
  static std::size_t k = 10;

  static std::string ids_path;
  auto* build = index->add_subcommand("build", "normalize vectors and write a store");
  build->add_option("--ids", ids_path, "ids, one per line")->required()->check(CLI::ExistingFile);
  build->add_option("--vectors", input, "PASEMB1 matrix or text rows")->required()->check(CLI::ExistingFile);
  build->add_option("--out", store_path, "store file")->required();
  build->add_option("--model-tag", model_tag, "embedding model tag");
  build->callback([&] {
    const auto matrix = ReadVectors(input);
    auto store = pas::index::BuildStore(pas::index::ReadIds(ids_path), matrix.values, matrix.dim,
                                        model_tag);
    pas::index::SaveStore(store, store_path);
    Print({{"count", store.size()}, {"dim", store.dim()}, {"model_tag", store.model_tag()}});
  });

  auto* query = index->add_subcommand("query", "exact top-k by cosine similarity");
  AddCommon(query, common, false);
  query->add_option("--store", store_path, "store file")->required()->check(CLI::ExistingFile);
  query->add_option("--k", k, "neighbours")->check(CLI::PositiveNumber);
  auto* by_id = query->add_option("--id", id, "query with a stored row");
  auto* by_text = query->add_option("--text", text, "query with text (text_embed provider)");
  by_id->excludes(by_text);
  query->callback([&] {
    const auto store = pas::index::LoadStore(store_path);
    pas::index::NeighborList result;
    if (!id.empty()) {
      auto row = store.find(id);
      if (!row) throw Error(ErrorKind::kDomain, "id not in store: " + id);
      result = pas::index::TopKForRow(store, *row, k);
    } else if (!text.empty()) {
      const auto config = Load(common);
      auto providers = Providers(config, common);
      auto& embedder = Need(providers.text_embed, "text_embed");
      const std::vector<std::string> items = {text};
      auto embedded = pas::gateway::EmbedBatch(embedder, items, 1);
      if (!embedded.front().ok()) throw Error(ErrorKind::kStage, *embedded.front().error);
      result = pas::index::TopK(store, embedded.front().vector, k);
    } else {
      throw Error(ErrorKind::kConfig, "one of --id or --text is required");
    }
    Json rows = Json::array();
    for (const auto& n : result.neighbors) rows.push_back({{"id", n.id}, {"similarity", n.similarity}});
    Print(rows);
  });
}

void SetupAcquisition(CLI::App& app, Common& common) {
  static std::string concepts_path, captions_path, real_path, synth_path, store_path, out;

  auto* retrieve = app.add_subcommand("retrieve", "retrieve real images for accepted concepts");
  AddCommon(retrieve, common);
  retrieve->add_option("--concepts", concepts_path, "validated bank")->required()->check(CLI::ExistingFile);
  retrieve->add_option("--out", out, "records (JSONL)")->required();
  retrieve->add_option("--store", store_path, "retrieval store (default: paths.image_store)");
  retrieve->add_option("--per-concept", common.per_concept, "images per concept");
  retrieve->callback([&] {
    auto config = Load(common);
    if (!store_path.empty()) config.paths.image_store = store_path;
    if (!config.paths.image_store) throw Error(ErrorKind::kConfig, "no retrieval store given");
    auto providers = Providers(config, common);
    const auto store = pas::index::LoadStore(*config.paths.image_store);
    auto result = pas::acquisition::RetrieveAll(pas::discovery::ReadBank(concepts_path).accepted(),
                                                Need(providers.text_embed, "text_embed"), store,
                                                config.acquisition, Batch(config, "text_embed"));
    pas::acquisition::WriteRecords(out, result.records);
    Print({{"records", result.records.size()},
           {"raw_hits", result.raw_hits},
           {"collapsed", result.collapsed},
           {"skipped_concepts", result.skipped_concepts},
           {"warnings", result.warnings}});
  });

  auto* captions = app.add_subcommand("captions", "sample captions for accepted concepts");
  AddCommon(captions, common);
  captions->add_option("--concepts", concepts_path, "validated bank")->required()->check(CLI::ExistingFile);
  captions->add_option("--out", out, "caption sets (JSONL)")->required();
  captions->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    auto result = pas::acquisition::GenerateAllCaptions(
        pas::discovery::ReadBank(concepts_path).accepted(), config.domain,
        Need(providers.captioner, "captioner"), config.acquisition);
    pas::acquisition::WriteCaptionSets(out, result.sets);
    Print({{"sets", result.sets.size()}, {"skipped_concepts", result.skipped_concepts}});
  });

  auto* synth = app.add_subcommand("synth", "generate synthetic images from captions");
  AddCommon(synth, common);
  synth->add_option("--captions", captions_path, "caption sets")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "records (JSONL)")->required();
  synth->add_option("--n-synth", common.n_synth, "images per caption");
  synth->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    auto result = pas::acquisition::SynthesizeAll(pas::acquisition::ReadCaptionSets(captions_path),
                                                  Need(providers.image_gen, "image_gen"),
                                                  config.acquisition);
    pas::acquisition::WriteRecords(out, result.records);
    Print({{"records", result.records.size()},
           {"failed_images", result.failed_images},
           {"empty_concepts", result.empty_concepts}});
  });

  auto* merge = app.add_subcommand("merge", "merge real and synthetic records");
  merge->add_option("--real", real_path, "real records")->required()->check(CLI::ExistingFile);
  merge->add_option("--synth", synth_path, "synthetic records")->required()->check(CLI::ExistingFile);
  merge->add_option("--out", out, "pool (JSONL)")->required();
  merge->callback([&] {
    auto pool = pas::acquisition::MergePools(pas::acquisition::ReadRecords(real_path),
                                             pas::acquisition::ReadRecords(synth_path));
    pas::acquisition::WriteRecords(out, pool);
    const auto counts = pas::curation::CountBySource(pool);
    Print({{"real", counts.real}, {"synthetic", counts.synthetic}, {"total", counts.total()}});
  });
}

void SetupCurate(CLI::App& app, Common& common) {
  auto* curate = app.add_subcommand("curate", "dedup, leak filter, OOD scoring and pruning");
  curate->require_subcommand(1);
  static std::string in, out, concepts_path, scores_path;
  static std::optional<std::size_t> target;
  static double sensitivity = 1.0;

  auto* dedup = curate->add_subcommand("dedup", "collapse near-duplicate components");
  AddCommon(dedup, common);
  dedup->add_option("--in", in, "records")->required()->check(CLI::ExistingFile);
  dedup->add_option("--out", out, "kept records")->required();
  dedup->add_option("--lambda-dup", common.lambda_dup, "duplicate similarity threshold");
  dedup->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    const auto records = pas::acquisition::ReadRecords(in);
    std::vector<ImageRecord> kept = records;
    Json sizes = Json::object();
    if (!records.empty()) {
      const auto copies = pas::pipeline::BuildCopyStore(records, config, providers);
      auto result = pas::curation::Dedup(records, copies, config.dedup);
      for (const auto& [size, count] : result.component_sizes) sizes[std::to_string(size)] = count;
      kept = std::move(result.kept);
    }
    pas::acquisition::WriteRecords(out, kept);
    Print({{"kept", kept.size()}, {"removed", records.size() - kept.size()},
           {"component_sizes", sizes}});
  });

  auto* leak = curate->add_subcommand("leak", "drop records that match protected images");
  AddCommon(leak, common);
  leak->add_option("--in", in, "records")->required()->check(CLI::ExistingFile);
  leak->add_option("--out", out, "kept records")->required();
  leak->add_option("--leak-threshold", common.leak_threshold, "protected similarity threshold");
  leak->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    const auto records = pas::acquisition::ReadRecords(in);
    std::vector<ImageRecord> kept = records;
    Json warnings = Json::array();
    const auto protected_store = pas::pipeline::ProtectedStore(config);
    if (protected_store.empty()) {
      warnings.push_back("no protected vectors; leak filter skipped");
    } else if (!records.empty()) {
      const auto copies = pas::pipeline::BuildCopyStore(records, config, providers);
      auto result = pas::curation::LeakFilter(records, copies, protected_store, config.leak);
      for (const auto& w : result.warnings) warnings.push_back(w);
      kept = std::move(result.kept);
    }
    pas::acquisition::WriteRecords(out, kept);
    Print({{"kept", kept.size()}, {"removed", records.size() - kept.size()},
           {"warnings", warnings}});
  });

  auto* score = curate->add_subcommand("score", "OOD triples and Pareto fronts");
  AddCommon(score, common);
  score->add_option("--in", in, "records")->required()->check(CLI::ExistingFile);
  score->add_option("--concepts", concepts_path, "validated bank")->required()->check(CLI::ExistingFile);
  score->add_option("--out", out, "scores (JSONL)")->required();
  score->callback([&] {
    const auto config = Load(common);
    auto providers = Providers(config, common);
    const auto records = pas::acquisition::ReadRecords(in);
    std::vector<std::string> bank;
    for (const auto& c : pas::discovery::ReadBank(concepts_path).accepted()) bank.push_back(c.text);
    std::vector<pas::curation::OODTriple> triples;
    pas::curation::ParetoAssignment assignment;
    if (!records.empty()) {
      triples = pas::curation::ScoreRecords(records, bank,
                                            pas::pipeline::GeneralBank(config, providers),
                                            Need(providers.ood, "ood_prob"), config.ood.batch_size);
      assignment = pas::curation::PeelFronts(triples);
    }
    pas::curation::WriteScores(out, triples, assignment);
    Print({{"scored", triples.size()}, {"fronts", assignment.fronts.size()}});
  });

  auto* prune = curate->add_subcommand("prune", "remove the most out-of-domain fronts");
  prune->add_option("--in", in, "records")->required()->check(CLI::ExistingFile);
  prune->add_option("--scores", scores_path, "scores file")->required()->check(CLI::ExistingFile);
  prune->add_option("--out", out, "retained records")->required();
  prune->add_option("--target-size", target, "keep exactly this many records");
  prune->add_option("--sensitivity", sensitivity, "kneedle sensitivity")->check(CLI::PositiveNumber);
  prune->callback([&] {
    const auto records = pas::acquisition::ReadRecords(in);
    const auto table = pas::curation::ReadScores(scores_path);
    Json summary = {{"fronts", table.assignment.fronts.size()}};
    std::vector<ImageRecord> kept;
    if (target) {
      kept = pas::curation::PruneToSize(table.assignment, records, table.triples, *target);
      summary["halt_mode"] = "target_size";
    } else {
      const auto decision = pas::curation::SelectHalt(table.assignment, table.triples, sensitivity);
      kept = pas::curation::RemoveFronts(table.assignment, records, decision.halt_front);
      summary["halt_mode"] = decision.halt_front ? "kneedle" : "none";
      summary["halt_front"] = decision.halt_front ? Json(*decision.halt_front) : Json(nullptr);
      summary["warnings"] = decision.warnings;
    }
    pas::acquisition::WriteRecords(out, kept);
    summary["retained"] = kept.size();
    Print(summary);
  });
}

void SetupRun(CLI::App& app, Common& common) {
  static bool resume = false;
  static std::optional<std::size_t> target;
  auto* run = app.add_subcommand("run", "run the whole pipeline with checkpoints");
  AddCommon(run, common);
  run->add_flag("--resume", resume, "continue from the last completed stage");
  run->add_option("--target-size", target, "prune to exactly this many records");
  run->callback([&] {
    auto config = Load(common);
    if (target) config.target_size = *target;
    pas::pipeline::RunOptions options;
    options.resume = resume;
    options.offline = common.Offline();
    const auto result = pas::pipeline::RunPipeline(config, options);
    Json executed = Json::array();
    for (auto s : result.executed) executed.push_back(pas::pipeline::ToString(s));
    Print({{"workspace", result.workspace.string()},
           {"executed", executed},
           {"retained", result.retained.size()},
           {"report", pas::curation::ToJson(result.report)}});
  });
}

void SetupMock(CLI::App& app) {
  auto* mock = app.add_subcommand("mock", "offline fixtures");
  mock->require_subcommand(1);
  static std::string dir;
  static pas::pipeline::MockCorpusOptions options;
  auto* corpus = mock->add_subcommand("corpus", "write a synthetic corpus and config");
  corpus->add_option("--out", dir, "output directory")->required();
  corpus->add_option("--seed", options.seed, "corpus seed");
  corpus->add_option("--vocabulary", options.vocabulary_size, "in-domain concepts");
  corpus->add_option("--images-per-concept", options.images_per_concept, "planted images per concept");
  corpus->add_option("--background", options.background, "unrelated images");
  corpus->callback([&] {
    const auto info = pas::pipeline::BuildMockCorpus(dir, options);
    Print({{"config", info.config.string()},
           {"retrieval_vectors", info.retrieval_vectors},
           {"planted_duplicates", info.planted_duplicates},
           {"planted_leaks", info.planted_leaks}});
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pas: domain-specific image dataset curation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pas::pipeline::kEngineVersion));
  Common common;
  SetupConcepts(app, common);
  SetupIndex(app, common);
  SetupAcquisition(app, common);
  SetupCurate(app, common);
  SetupRun(app, common);
  SetupMock(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return pas::pipeline::ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
