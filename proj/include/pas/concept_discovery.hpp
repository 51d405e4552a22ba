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

#ifndef PAS_CONCEPT_DISCOVERY_HPP_
#define PAS_CONCEPT_DISCOVERY_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pas/model_gateway.hpp"

namespace pas::discovery {

struct DomainSpec {
  std::string name;         // e.g. "birds"
  std::string description;  // e.g. "bird species"
};

std::vector<std::string> Violations(const DomainSpec& domain);

enum class ConceptOrigin { kGenerated, kExpanded };
enum class Validation { kPending, kAccepted, kRejected };
enum class BankPhase { kInitial, kExpanded, kValidated };

struct Concept {
  std::string id;
  std::string text;  // display form, original casing
  std::string key;   // uniqueness key
  ConceptOrigin origin = ConceptOrigin::kGenerated;
  std::optional<std::string> parent_id;
  int iteration = 0;
  Validation validated = Validation::kPending;
};

struct RoundLog {
  std::string phase;  // "generation" | "expansion"
  int round = 0;
  std::size_t size_before = 0;
  std::size_t gain = 0;
  std::size_t calls = 0;
};

struct DiscoveryLog {
  std::vector<RoundLog> rounds;
  std::size_t skipped_expansions = 0;
  std::size_t unparseable_verdicts = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> warnings;
};

struct ConceptBank {
  DomainSpec domain;
  std::vector<Concept> concepts;
  BankPhase phase = BankPhase::kInitial;
  std::string generator;                        // model identity of the generating LLM
  std::vector<gateway::ChatMessage> transcript;  // generation exchanges, user/assistant pairs
  DiscoveryLog log;

  bool contains_key(std::string_view key) const;
  const Concept* find(std::string_view id) const;
  std::vector<Concept> accepted() const;
};

/// Broken bank invariants (empty when the bank is consistent).
std::vector<std::string> Violations(const ConceptBank& bank);

struct PromptTemplates {
  std::string system;
  std::string generation;
  std::string expansion;
  std::string validation;
};

PromptTemplates DefaultTemplates();

/// Substitutes {domain_name}, {domain_description} and {concept}; other
/// braces are left untouched.
std::string RenderTemplate(std::string_view tmpl, const DomainSpec& domain,
                           std::string_view concept_text = {});

struct DiscoveryConfig {
  double lambda1 = 0.01;
  double lambda2 = 0.01;
  int max_generation_rounds = 50;
  int max_expansion_rounds = 10;
  std::int64_t base_seed = 0;
  std::size_t history_turns = 20;  // exchanges of generation context kept for expansion
  double temperature = 0.7;
  PromptTemplates templates = DefaultTemplates();
};

std::vector<std::string> Violations(const DiscoveryConfig& config);

struct CanonicalConcept {
  std::string display;
  std::string key;
};

/// Trims, strips list markers and quotes, collapses whitespace; the key is
/// additionally ASCII case-folded. Throws kInvalidConcept when nothing is left.
CanonicalConcept CanonicalizeConcept(std::string_view raw);
std::optional<CanonicalConcept> TryCanonicalize(std::string_view raw);

/// Stable id derived from the uniqueness key.
std::string ConceptId(std::string_view key);

/// Seed used for the expansion call of a concept: base_seed + hash(key).
std::int64_t ExpansionSeed(std::int64_t base_seed, std::string_view key);

ConceptBank GenerateInitialConcepts(const DomainSpec& domain, gateway::ChatProvider& provider,
                                    const DiscoveryConfig& config);

ConceptBank ExpandConcepts(ConceptBank bank, gateway::ChatProvider& provider,
                           const DiscoveryConfig& config);

ConceptBank ValidateConcepts(ConceptBank bank, gateway::ChatProvider& validator,
                             const DiscoveryConfig& config);

// Persistence: line-delimited concepts in `path`, domain/phase/transcript/log
// in `<path>.meta.json`.
nlohmann::json ToJson(const Concept& c);
Concept ConceptFromJson(const nlohmann::json& j);
void WriteBank(const std::filesystem::path& path, const ConceptBank& bank);
ConceptBank ReadBank(const std::filesystem::path& path);

std::string_view ToString(ConceptOrigin origin);
std::string_view ToString(Validation v);
std::string_view ToString(BankPhase phase);

}  // namespace pas::discovery

#endif  // PAS_CONCEPT_DISCOVERY_HPP_
