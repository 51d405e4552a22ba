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

#ifndef PAS_ACQUISITION_HPP_
#define PAS_ACQUISITION_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pas/concept_discovery.hpp"
#include "pas/embedding_index.hpp"
#include "pas/model_gateway.hpp"

namespace pas::acquisition {

enum class Source { kReal, kSynthetic };

std::string_view ToString(Source source);

struct ImageRecord {
  std::string id;
  std::string uri;
  Source source = Source::kReal;
  std::string concept_id;
  std::optional<std::string> caption;            // synthetic only
  std::optional<double> retrieval_similarity;    // real only

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Broken record invariants, empty when the record is well formed.
std::vector<std::string> Violations(const ImageRecord& record);

std::string RealRecordId(std::string_view uri);
std::string SyntheticRecordId(std::string_view prompt, std::int64_t seed, std::size_t index);

struct CaptionSet {
  std::string concept_id;
  std::string concept_key;
  std::vector<std::string> captions;
  std::vector<std::int64_t> seeds;
};

struct AcquisitionConfig {
  std::size_t per_concept_real = 500;
  std::size_t n_cap = 5;
  std::size_t n_synth = 35;
  std::string caption_template;
  std::int64_t base_seed = 0;
  double caption_temperature = 1.0;

  AcquisitionConfig();
};

std::string DefaultCaptionTemplate();
std::vector<std::string> Violations(const AcquisitionConfig& config);

/// Seed of caption `index` of a concept.
std::int64_t CaptionSeed(std::int64_t base_seed, std::string_view concept_key, std::size_t index);
/// Image generation seed for caption `index` of a concept.
std::int64_t SynthSeed(std::string_view concept_key, std::size_t index);

struct RetrievalResult {
  std::vector<ImageRecord> records;  // sorted by id, one per uri
  std::size_t raw_hits = 0;          // before cross-concept collapse
  std::size_t collapsed = 0;
  std::vector<std::string> skipped_concepts;
  std::vector<std::string> warnings;
};

/// Top-k real images for one concept, in rank order. Returns nullopt when the
/// embedder fails for this concept.
std::optional<std::vector<ImageRecord>> RetrieveForConcept(
    const discovery::Concept& concept_entry, gateway::EmbeddingProvider& text_embedder,
    const index::EmbeddingStore& image_store, const AcquisitionConfig& config);

/// Retrieval over a whole bank with cross-concept collapse: an image linked
/// to several concepts keeps the highest similarity (ties: lower concept id).
RetrievalResult RetrieveAll(const std::vector<discovery::Concept>& concepts,
                            gateway::EmbeddingProvider& text_embedder,
                            const index::EmbeddingStore& image_store,
                            const AcquisitionConfig& config, std::size_t batch_size = 64);

/// Samples n_cap captions. Returns nullopt when the provider fails.
std::optional<CaptionSet> GenerateCaptions(const discovery::Concept& concept_entry,
                                           const discovery::DomainSpec& domain,
                                           gateway::ChatProvider& chat,
                                           const AcquisitionConfig& config);

struct CaptionResult {
  std::vector<CaptionSet> sets;  // concept order
  std::vector<std::string> skipped_concepts;
};

CaptionResult GenerateAllCaptions(const std::vector<discovery::Concept>& concepts,
                                  const discovery::DomainSpec& domain,
                                  gateway::ChatProvider& chat, const AcquisitionConfig& config);

struct SynthResult {
  std::vector<ImageRecord> records;
  std::size_t failed_images = 0;
  std::vector<std::string> empty_concepts;
};

SynthResult SynthesizeForCaptions(const CaptionSet& caption_set,
                                  gateway::ImageGenProvider& image_gen,
                                  const AcquisitionConfig& config);

SynthResult SynthesizeAll(const std::vector<CaptionSet>& caption_sets,
                          gateway::ImageGenProvider& image_gen, const AcquisitionConfig& config);

/// Real block then synthetic block, each sorted by id. Throws kIntegrity on
/// any duplicate id.
std::vector<ImageRecord> MergePools(std::vector<ImageRecord> real,
                                    std::vector<ImageRecord> synth);

nlohmann::json ToJson(const ImageRecord& record);
ImageRecord RecordFromJson(const nlohmann::json& j);
std::vector<ImageRecord> ReadRecords(const std::filesystem::path& path);
void WriteRecords(const std::filesystem::path& path, const std::vector<ImageRecord>& records);

nlohmann::json ToJson(const CaptionSet& set);
CaptionSet CaptionSetFromJson(const nlohmann::json& j);
std::vector<CaptionSet> ReadCaptionSets(const std::filesystem::path& path);
void WriteCaptionSets(const std::filesystem::path& path, const std::vector<CaptionSet>& sets);

}  // namespace pas::acquisition

#endif  // PAS_ACQUISITION_HPP_
