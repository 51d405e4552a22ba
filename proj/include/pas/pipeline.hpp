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

#ifndef PAS_PIPELINE_HPP_
#define PAS_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pas/acquisition.hpp"
#include "pas/concept_discovery.hpp"
#include "pas/curation.hpp"
#include "pas/embedding_index.hpp"
#include "pas/error.hpp"
#include "pas/model_gateway.hpp"

namespace pas::pipeline {

inline constexpr std::string_view kEngineVersion = "0.3.1";

enum class Stage {
  kConcepts,
  kExpand,
  kValidate,
  kRetrieve,
  kCaptions,
  kSynth,
  kMerge,
  kDedup,
  kLeak,
  kScore,
  kPrune,
  kManifest,
};

inline constexpr std::array kAllStages = {
    Stage::kConcepts, Stage::kExpand, Stage::kValidate, Stage::kRetrieve,
    Stage::kCaptions, Stage::kSynth,  Stage::kMerge,    Stage::kDedup,
    Stage::kLeak,     Stage::kScore,  Stage::kPrune,    Stage::kManifest};

std::string_view ToString(Stage stage);
Stage ParseStage(std::string_view name);

// ---------------------------------------------------------------------------
// Configuration

/// Provider roles. "validator" and "captioner" are chat endpoints; the
/// captioner falls back to "chat" when absent.
inline constexpr std::array<std::string_view, 7> kProviderRoles = {
    "chat", "validator", "captioner", "text_embed", "image_embed", "image_gen", "ood_prob"};

struct PathConfig {
  std::filesystem::path workspace;
  std::optional<std::filesystem::path> image_store;  // retrieval index, keyed by image uri
  std::optional<std::filesystem::path> copy_store;   // copy-detection vectors, keyed by image uri
  std::vector<std::filesystem::path> protected_stores;
};

struct StageToggles {
  bool retrieve = true;
  bool synth = true;  // captions + synth
  bool dedup = true;
  bool leak = true;
  bool score = true;  // OOD scoring and Pareto pruning
};

struct OodSettings {
  double kneedle_sensitivity = 1.0;
  std::vector<std::string> general_concepts;  // empty: ask the chat model
  std::string general_bank_template =
      "Name broad, everyday categories of things that appear in ordinary photographs, "
      "from people and buildings to food and vehicles. Include {domain_name}. One per line.";
  std::size_t batch_size = 64;
};

struct MockSettings {
  std::size_t vocabulary_size = 50;
  std::size_t text_dim = 64;
  std::size_t copy_dim = 128;
  std::string text_model_tag = "mock-joint-v1";
  std::string copy_model_tag = "mock-copy-v1";
};

struct PipelineConfig {
  discovery::DomainSpec domain;
  discovery::DiscoveryConfig discovery;
  acquisition::AcquisitionConfig acquisition;
  curation::DedupConfig dedup;
  curation::LeakFilterConfig leak;
  OodSettings ood;
  std::map<std::string, gateway::ProviderEndpoint> providers;  // role -> endpoint
  PathConfig paths;
  StageToggles stages;
  std::optional<std::size_t> target_size;
  std::int64_t base_seed = 0;
  MockSettings mock;

  // Problems found while reading the file; reported by ValidateConfig.
  std::vector<std::string> parse_errors;
  std::vector<std::string> unresolved_env;  // "<json path>: VAR"

  /// Propagates base_seed into the per-module configs.
  void ApplySeed(std::int64_t seed);
};

/// Replaces ${VAR} in every string; unset variables are reported in
/// `unresolved` as "<json pointer>: VAR" and become empty.
nlohmann::json InterpolateEnv(const nlohmann::json& value, std::vector<std::string>& unresolved,
                              const std::string& pointer = "");

/// Relative paths are resolved against `base_dir`. Type errors and unknown
/// keys are collected in parse_errors rather than thrown.
PipelineConfig ParseConfig(const nlohmann::json& raw, const std::filesystem::path& base_dir);
PipelineConfig LoadConfig(const std::filesystem::path& path);

/// Resolved config as JSON; tokens are replaced by "***" when `redact`.
nlohmann::json ConfigToJson(const PipelineConfig& config, bool redact = true);

/// Every violation at once; empty means valid. In offline mode provider
/// endpoints are not required.
std::vector<std::string> ValidateConfig(const PipelineConfig& config, bool offline);

// ---------------------------------------------------------------------------
// Providers

struct ProviderSet {
  std::shared_ptr<gateway::ChatProvider> chat;
  std::shared_ptr<gateway::ChatProvider> validator;
  std::shared_ptr<gateway::ChatProvider> captioner;
  std::shared_ptr<gateway::EmbeddingProvider> text_embed;
  std::shared_ptr<gateway::EmbeddingProvider> image_embed;
  std::shared_ptr<gateway::ImageGenProvider> image_gen;
  std::shared_ptr<gateway::OodProvider> ood;

  /// Sum of call counters over distinct providers.
  std::size_t total_calls() const;
};

ProviderSet MakeMockProviders(const PipelineConfig& config);
ProviderSet MakeHttpProviders(const PipelineConfig& config,
                              std::shared_ptr<gateway::Transport> transport);

// ---------------------------------------------------------------------------
// Stage helpers shared with the CLI

/// Copy-detection vectors keyed by record id. Rows come from the configured
/// copy store (looked up by uri); the rest are embedded with image_embed.
/// Any embedding failure is a kStage error.
index::EmbeddingStore BuildCopyStore(const std::vector<acquisition::ImageRecord>& pool,
                                     const PipelineConfig& config, const ProviderSet& providers);

/// All protected stores concatenated, ids prefixed "<store index>:". Empty
/// when no store holds vectors.
index::EmbeddingStore ProtectedStore(const PipelineConfig& config);

/// Configured general concepts, or the chat model's list plus the domain name.
std::vector<std::string> GeneralBank(const PipelineConfig& config, const ProviderSet& providers);

// ---------------------------------------------------------------------------
// Running

enum class StageEvent { kBeforeCheckpoint, kAfterCheckpoint };

struct RunOptions {
  bool resume = false;
  std::optional<bool> offline;  // default: PAS_OFFLINE
  std::optional<ProviderSet> providers;  // overrides both mocks and HTTP
  std::shared_ptr<gateway::Transport> transport;  // for HTTP providers
  /// Called around every checkpoint write; throwing aborts the run there.
  std::function<void(Stage, StageEvent)> on_stage;
};

struct RunResult {
  std::vector<acquisition::ImageRecord> retained;
  curation::CurationReport report;
  std::vector<Stage> executed;  // stages run by this invocation
  std::filesystem::path workspace;
};

/// Runs every pending stage. Without `resume` the workspace is reset first.
/// Errors: kConfig (invalid config), kStage, kCorruption (digest mismatch).
RunResult RunPipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Resumes from the first pending stage of `config`'s workspace.
RunResult Resume(const PipelineConfig& config, RunOptions options = {});

/// Files produced by a stage, relative to the workspace.
std::vector<std::string> StageOutputs(Stage stage);

/// Writes manifest.jsonl, report.json and config.lock.json atomically.
void EmitManifest(const std::filesystem::path& workspace,
                  const std::vector<acquisition::ImageRecord>& records,
                  const nlohmann::json& report, const PipelineConfig& config);

/// CLI exit code for an error kind: 2 config, 4 corruption, 3 otherwise.
int ExitCode(ErrorKind kind);

// ---------------------------------------------------------------------------
// Synthetic corpus for offline runs

struct MockCorpusOptions {
  std::size_t vocabulary_size = 50;
  std::size_t images_per_concept = 60;
  std::size_t background = 2000;
  std::size_t text_dim = 64;
  std::size_t copy_dim = 128;
  std::size_t protected_count = 100;
  std::size_t planted_leaks = 20;
  std::int64_t seed = 7;
};

struct MockCorpusInfo {
  std::filesystem::path config;
  std::size_t retrieval_vectors = 0;
  std::size_t planted_duplicates = 0;
  std::size_t planted_leaks = 0;
};

/// Writes images.emb, copy.emb, protected.emb and a ready-to-run
/// config.json into `dir`.
MockCorpusInfo BuildMockCorpus(const std::filesystem::path& dir, const MockCorpusOptions& options);

}  // namespace pas::pipeline

#endif  // PAS_PIPELINE_HPP_
