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

#include "pas/acquisition.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "pas/error.hpp"
#include "pas/hashing.hpp"
#include "pas/io.hpp"
#include "pas/log.hpp"
#include "pas/parallel.hpp"

namespace pas::acquisition {

using discovery::Concept;
using Json = nlohmann::json;

namespace {

bool IsProviderFailure(const Error& e) {
  return e.kind() == ErrorKind::kTransport || e.kind() == ErrorKind::kProtocol;
}

std::int64_t NonNegative(std::uint64_t h) { return static_cast<std::int64_t>(h >> 1); }

std::string CleanCaption(std::string_view reply) {
  std::string_view rest = reply;
  while (!rest.empty()) {
    auto nl = rest.find('\n');
    std::string line = gateway::Trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    line = gateway::CollapseWhitespace(gateway::StripQuotes(line));
    if (!line.empty()) return line;
  }
  return {};
}

}  // namespace

std::string_view ToString(Source source) {
  return source == Source::kReal ? "real" : "synthetic";
}

std::vector<std::string> Violations(const ImageRecord& r) {
  std::vector<std::string> out;
  if (r.id.empty()) out.push_back("record without id");
  if (r.uri.empty()) out.push_back("record " + r.id + " without uri");
  if (r.source == Source::kSynthetic && !r.caption) {
    out.push_back("synthetic record " + r.id + " without caption");
  }
  if (r.source == Source::kReal) {
    if (!r.retrieval_similarity) {
      out.push_back("real record " + r.id + " without retrieval similarity");
    } else if (!(*r.retrieval_similarity >= -1.0 && *r.retrieval_similarity <= 1.0)) {
      out.push_back("real record " + r.id + " similarity outside [-1,1]");
    }
  }
  return out;
}

std::string RealRecordId(std::string_view uri) { return Hex64(HashFields({"real", uri})); }

std::string SyntheticRecordId(std::string_view prompt, std::int64_t seed, std::size_t index) {
  return Hex64(
      HashFields({"synthetic", prompt, std::to_string(seed), std::to_string(index)}));
}

std::string DefaultCaptionTemplate() {
  return "Write one vivid, detailed caption for a photograph whose main subject is "
         "{concept}, one of the {domain_description} in the {domain_name} domain. Place the "
         "subject in a concrete scene. Reply with the caption only.";
}

AcquisitionConfig::AcquisitionConfig() : caption_template(DefaultCaptionTemplate()) {}

std::vector<std::string> Violations(const AcquisitionConfig& config) {
  std::vector<std::string> out;
  if (config.per_concept_real < 1) out.push_back("per_concept_real must be >= 1");
  if (config.n_cap < 1) out.push_back("n_cap must be >= 1");
  if (config.n_synth < 1) out.push_back("n_synth must be >= 1");
  if (config.caption_template.find("{concept}") == std::string::npos) {
    out.push_back("caption_template lacks {concept}");
  }
  return out;
}

std::int64_t CaptionSeed(std::int64_t base_seed, std::string_view concept_key, std::size_t index) {
  return NonNegative(HashFields({"caption", std::to_string(base_seed), concept_key})) +
         static_cast<std::int64_t>(index);
}

std::int64_t SynthSeed(std::string_view concept_key, std::size_t index) {
  return NonNegative(HashFields({"synth", concept_key, std::to_string(index)}));
}

namespace {

void CheckStore(const index::EmbeddingStore& store, const gateway::EmbeddingProvider& embedder) {
  if (store.empty()) throw Error(ErrorKind::kStage, "retrieval store is empty");
  if (store.model_tag().empty()) {
    Log()->warn("retrieval store has no model tag; cannot check it matches {}",
                embedder.model_tag());
  } else if (store.model_tag() != embedder.model_tag()) {
    throw Error(ErrorKind::kStage, "retrieval store model tag " + store.model_tag() +
                                       " does not match text embedder " + embedder.model_tag());
  }
}

std::vector<ImageRecord> ToRecords(const Concept& c, const index::NeighborList& hits) {
  std::vector<ImageRecord> out;
  out.reserve(hits.neighbors.size());
  for (const auto& n : hits.neighbors) {
    ImageRecord r;
    r.id = RealRecordId(n.id);
    r.uri = n.id;
    r.source = Source::kReal;
    r.concept_id = c.id;
    r.retrieval_similarity = n.similarity;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::optional<std::vector<ImageRecord>> RetrieveForConcept(
    const Concept& concept_entry, gateway::EmbeddingProvider& text_embedder,
    const index::EmbeddingStore& image_store, const AcquisitionConfig& config) {
  CheckStore(image_store, text_embedder);
  std::vector<std::string> items{concept_entry.text};
  std::vector<gateway::EmbedItemResult> embedded;
  try {
    embedded = gateway::EmbedBatch(text_embedder, items, 1);
  } catch (const Error& e) {
    if (!IsProviderFailure(e)) throw;
    Log()->warn("retrieval for \"{}\" skipped: {}", concept_entry.text, e.what());
    return std::nullopt;
  }
  if (!embedded[0].ok()) {
    Log()->warn("retrieval for \"{}\" skipped: {}", concept_entry.text, *embedded[0].error);
    return std::nullopt;
  }
  if (embedded[0].vector.size() != image_store.dim()) {
    throw Error(ErrorKind::kStage, "text embedding dimension " +
                                       std::to_string(embedded[0].vector.size()) +
                                       " does not match store dimension " +
                                       std::to_string(image_store.dim()));
  }
  return ToRecords(concept_entry,
                   index::TopK(image_store, embedded[0].vector, config.per_concept_real));
}

RetrievalResult RetrieveAll(const std::vector<Concept>& concepts,
                            gateway::EmbeddingProvider& text_embedder,
                            const index::EmbeddingStore& image_store,
                            const AcquisitionConfig& config, std::size_t batch_size) {
  CheckStore(image_store, text_embedder);
  RetrievalResult result;
  if (concepts.empty()) return result;

  std::vector<std::string> texts;
  texts.reserve(concepts.size());
  for (const auto& c : concepts) texts.push_back(c.text);

  // Embed chunk by chunk so a failing chunk only skips its own concepts.
  std::vector<gateway::EmbedItemResult> embedded(concepts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += batch_size) {
    const std::size_t len = std::min(batch_size, texts.size() - begin);
    std::span<const std::string> chunk(texts.data() + begin, len);
    try {
      auto part = gateway::EmbedBatch(text_embedder, chunk, batch_size);
      std::move(part.begin(), part.end(), embedded.begin() + static_cast<std::ptrdiff_t>(begin));
    } catch (const Error& e) {
      if (!IsProviderFailure(e)) throw;
      for (std::size_t i = begin; i < begin + len; ++i) embedded[i].error = e.what();
    }
  }

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (!embedded[i].ok()) {
      result.skipped_concepts.push_back(concepts[i].id);
      result.warnings.push_back("retrieval skipped for \"" + concepts[i].text +
                                "\": " + *embedded[i].error);
      Log()->warn("{}", result.warnings.back());
    } else if (embedded[i].vector.size() != image_store.dim()) {
      throw Error(ErrorKind::kStage, "text embedding dimension " +
                                         std::to_string(embedded[i].vector.size()) +
                                         " does not match store dimension " +
                                         std::to_string(image_store.dim()));
    } else {
      usable.push_back(i);
    }
  }

  auto per_concept = ParallelMap(usable.size(), DefaultWorkers(), [&](std::size_t u) {
    const std::size_t i = usable[u];
    return ToRecords(concepts[i],
                     index::TopK(image_store, embedded[i].vector, config.per_concept_real));
  });

  std::map<std::string, ImageRecord> best;
  for (auto& records : per_concept) {
    result.raw_hits += records.size();
    for (auto& r : records) {
      auto [it, inserted] = best.try_emplace(r.id, r);
      if (inserted) continue;
      ImageRecord& kept = it->second;
      const double a = *r.retrieval_similarity;
      const double b = *kept.retrieval_similarity;
      if (a > b || (a == b && r.concept_id < kept.concept_id)) kept = std::move(r);
    }
  }
  result.collapsed = result.raw_hits - best.size();
  result.records.reserve(best.size());
  for (auto& [id, r] : best) result.records.push_back(std::move(r));
  return result;
}

std::optional<CaptionSet> GenerateCaptions(const Concept& concept_entry,
                                           const discovery::DomainSpec& domain,
                                           gateway::ChatProvider& chat,
                                           const AcquisitionConfig& config) {
  const std::string prompt =
      discovery::RenderTemplate(config.caption_template, domain, concept_entry.text);
  auto sample = [&](std::int64_t seed) {
    gateway::ChatRequest request;
    request.messages.push_back({gateway::Role::kUser, prompt});
    request.seed = seed;
    request.temperature = config.caption_temperature;
    request.task = gateway::ChatTask::kCaption;
    request.subject = concept_entry.text;
    return CleanCaption(gateway::ChatComplete(chat, request));
  };

  CaptionSet set;
  set.concept_id = concept_entry.id;
  set.concept_key = concept_entry.key;
  std::set<std::string> seen;
  try {
    for (std::size_t j = 0; j < config.n_cap; ++j) {
      std::int64_t seed = CaptionSeed(config.base_seed, concept_entry.key, j);
      std::string caption = sample(seed);
      if (caption.empty() || seen.count(caption)) {
        seed = CaptionSeed(config.base_seed, concept_entry.key, config.n_cap + j);
        caption = sample(seed);
      }
      if (caption.empty()) caption = concept_entry.text;
      seen.insert(caption);
      set.captions.push_back(std::move(caption));
      set.seeds.push_back(seed);
    }
  } catch (const Error& e) {
    if (!IsProviderFailure(e)) throw;
    Log()->warn("captions for \"{}\" skipped: {}", concept_entry.text, e.what());
    return std::nullopt;
  }
  return set;
}

CaptionResult GenerateAllCaptions(const std::vector<Concept>& concepts,
                                  const discovery::DomainSpec& domain,
                                  gateway::ChatProvider& chat, const AcquisitionConfig& config) {
  auto sets = ParallelMap(concepts.size(), chat.max_in_flight(), [&](std::size_t i) {
    return GenerateCaptions(concepts[i], domain, chat, config);
  });
  CaptionResult result;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (sets[i]) {
      result.sets.push_back(std::move(*sets[i]));
    } else {
      result.skipped_concepts.push_back(concepts[i].id);
    }
  }
  return result;
}

SynthResult SynthesizeForCaptions(const CaptionSet& caption_set,
                                  gateway::ImageGenProvider& image_gen,
                                  const AcquisitionConfig& config) {
  SynthResult result;
  for (std::size_t j = 0; j < caption_set.captions.size(); ++j) {
    const std::string& caption = caption_set.captions[j];
    const std::int64_t seed = SynthSeed(caption_set.concept_key, j);
    gateway::GenerationResult generated;
    try {
      generated = gateway::GenerateImages(image_gen, caption, config.n_synth, seed);
    } catch (const Error& e) {
      if (!IsProviderFailure(e) && e.kind() != ErrorKind::kStage) throw;
      Log()->warn("synthesis failed for caption \"{}\": {}", caption, e.what());
      result.failed_images += config.n_synth;
      continue;
    }
    result.failed_images += generated.failed;
    for (std::size_t i = 0; i < generated.uris.size(); ++i) {
      ImageRecord r;
      r.id = SyntheticRecordId(caption, seed, i);
      r.uri = generated.uris[i];
      r.source = Source::kSynthetic;
      r.concept_id = caption_set.concept_id;
      r.caption = caption;
      result.records.push_back(std::move(r));
    }
  }
  if (result.records.empty()) {
    Log()->warn("no synthetic images for concept {}", caption_set.concept_id);
    result.empty_concepts.push_back(caption_set.concept_id);
  }
  return result;
}

SynthResult SynthesizeAll(const std::vector<CaptionSet>& caption_sets,
                          gateway::ImageGenProvider& image_gen, const AcquisitionConfig& config) {
  auto parts = ParallelMap(caption_sets.size(), image_gen.max_in_flight(), [&](std::size_t i) {
    return SynthesizeForCaptions(caption_sets[i], image_gen, config);
  });
  SynthResult result;
  for (auto& p : parts) {
    result.failed_images += p.failed_images;
    std::move(p.records.begin(), p.records.end(), std::back_inserter(result.records));
    std::move(p.empty_concepts.begin(), p.empty_concepts.end(),
              std::back_inserter(result.empty_concepts));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
  return result;
}

std::vector<ImageRecord> MergePools(std::vector<ImageRecord> real,
                                    std::vector<ImageRecord> synth) {
  auto by_id = [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; };
  std::sort(real.begin(), real.end(), by_id);
  std::sort(synth.begin(), synth.end(), by_id);
  std::vector<ImageRecord> merged;
  merged.reserve(real.size() + synth.size());
  std::move(real.begin(), real.end(), std::back_inserter(merged));
  std::move(synth.begin(), synth.end(), std::back_inserter(merged));
  std::set<std::string_view> seen;
  std::vector<std::string> dups;
  for (const auto& r : merged) {
    if (!seen.insert(r.id).second) dups.push_back(r.id);
  }
  if (!dups.empty()) {
    std::string list;
    for (std::size_t i = 0; i < dups.size() && i < 10; ++i) list += (i ? ", " : "") + dups[i];
    throw Error(ErrorKind::kIntegrity,
                std::to_string(dups.size()) + " duplicate record ids when merging pools: " + list);
  }
  return merged;
}

Json ToJson(const ImageRecord& r) {
  Json j = {{"id", r.id},
            {"uri", r.uri},
            {"source", ToString(r.source)},
            {"concept_id", r.concept_id}};
  if (r.caption) j["caption"] = *r.caption;
  if (r.retrieval_similarity) j["retrieval_similarity"] = *r.retrieval_similarity;
  return j;
}

ImageRecord RecordFromJson(const Json& j) {
  ImageRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.uri = j.at("uri").get<std::string>();
    const auto source = j.at("source").get<std::string>();
    if (source == "real") {
      r.source = Source::kReal;
    } else if (source == "synthetic") {
      r.source = Source::kSynthetic;
    } else {
      throw Error(ErrorKind::kFormat, "unknown record source: " + source);
    }
    r.concept_id = j.at("concept_id").get<std::string>();
    if (j.contains("caption") && !j["caption"].is_null()) r.caption = j["caption"].get<std::string>();
    if (j.contains("retrieval_similarity") && !j["retrieval_similarity"].is_null()) {
      r.retrieval_similarity = j["retrieval_similarity"].get<double>();
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("bad image record: ") + e.what());
  }
  if (auto v = Violations(r); !v.empty()) throw Error(ErrorKind::kFormat, v.front());
  return r;
}

std::vector<ImageRecord> ReadRecords(const std::filesystem::path& path) {
  std::vector<ImageRecord> out;
  for (const auto& row : io::ReadJsonl(path)) out.push_back(RecordFromJson(row));
  return out;
}

void WriteRecords(const std::filesystem::path& path, const std::vector<ImageRecord>& records) {
  std::vector<Json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(ToJson(r));
  io::WriteJsonl(path, rows);
}

Json ToJson(const CaptionSet& set) {
  return Json{{"concept_id", set.concept_id},
              {"concept_key", set.concept_key},
              {"captions", set.captions},
              {"seeds", set.seeds}};
}

CaptionSet CaptionSetFromJson(const Json& j) {
  CaptionSet set;
  try {
    set.concept_id = j.at("concept_id").get<std::string>();
    set.concept_key = j.at("concept_key").get<std::string>();
    set.captions = j.at("captions").get<std::vector<std::string>>();
    set.seeds = j.at("seeds").get<std::vector<std::int64_t>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("bad caption set: ") + e.what());
  }
  if (set.captions.size() != set.seeds.size()) {
    throw Error(ErrorKind::kFormat, "caption set " + set.concept_id + ": captions/seeds mismatch");
  }
  return set;
}

std::vector<CaptionSet> ReadCaptionSets(const std::filesystem::path& path) {
  std::vector<CaptionSet> out;
  for (const auto& row : io::ReadJsonl(path)) out.push_back(CaptionSetFromJson(row));
  return out;
}

void WriteCaptionSets(const std::filesystem::path& path, const std::vector<CaptionSet>& sets) {
  std::vector<Json> rows;
  rows.reserve(sets.size());
  for (const auto& s : sets) rows.push_back(ToJson(s));
  io::WriteJsonl(path, rows);
}

}  // namespace pas::acquisition
