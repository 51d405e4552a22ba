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

#include "pas/concept_discovery.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "pas/error.hpp"
#include "pas/hashing.hpp"
#include "pas/io.hpp"
#include "pas/log.hpp"
#include "pas/parallel.hpp"

namespace pas::discovery {

using gateway::ChatMessage;
using gateway::ChatRequest;
using gateway::ChatTask;
using gateway::Role;
using Json = nlohmann::json;

std::string_view ToString(ConceptOrigin origin) {
  return origin == ConceptOrigin::kGenerated ? "generated" : "expanded";
}

std::string_view ToString(Validation v) {
  switch (v) {
    case Validation::kPending: return "pending";
    case Validation::kAccepted: return "accepted";
    case Validation::kRejected: return "rejected";
  }
  return "pending";
}

std::string_view ToString(BankPhase phase) {
  switch (phase) {
    case BankPhase::kInitial: return "initial";
    case BankPhase::kExpanded: return "expanded";
    case BankPhase::kValidated: return "validated";
  }
  return "initial";
}

namespace {

ConceptOrigin ParseOrigin(const std::string& s) {
  if (s == "generated") return ConceptOrigin::kGenerated;
  if (s == "expanded") return ConceptOrigin::kExpanded;
  throw Error(ErrorKind::kFormat, "unknown concept origin: " + s);
}

Validation ParseValidation(const std::string& s) {
  if (s == "pending") return Validation::kPending;
  if (s == "accepted") return Validation::kAccepted;
  if (s == "rejected") return Validation::kRejected;
  throw Error(ErrorKind::kFormat, "unknown validation state: " + s);
}

BankPhase ParsePhase(const std::string& s) {
  if (s == "initial") return BankPhase::kInitial;
  if (s == "expanded") return BankPhase::kExpanded;
  if (s == "validated") return BankPhase::kValidated;
  throw Error(ErrorKind::kFormat, "unknown bank phase: " + s);
}

// Provider failures surface as stage errors so the pipeline can keep its
// checkpoint and stop.
template <typename Fn>
auto AsStage(std::string_view what, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kTransport || e.kind() == ErrorKind::kProtocol) {
      throw Error(ErrorKind::kStage, std::string(what) + ": " + e.what());
    }
    throw;
  }
}

bool IsProviderFailure(const Error& e) {
  return e.kind() == ErrorKind::kTransport || e.kind() == ErrorKind::kProtocol;
}

std::vector<ChatMessage> BaseMessages(const DiscoveryConfig& config, const DomainSpec& domain) {
  std::vector<ChatMessage> messages;
  if (!config.templates.system.empty()) {
    messages.push_back({Role::kSystem, RenderTemplate(config.templates.system, domain)});
  }
  return messages;
}

// Adds every new canonical concept from `reply`; returns how many were new.
std::size_t Absorb(ConceptBank& bank, std::set<std::string>& keys, std::string_view reply,
                   ConceptOrigin origin, const std::optional<std::string>& parent, int iteration) {
  std::size_t added = 0;
  for (const auto& raw : gateway::ParseConceptList(reply).items) {
    auto canonical = TryCanonicalize(raw);
    if (!canonical) continue;
    if (!keys.insert(canonical->key).second) continue;
    Concept c;
    c.id = ConceptId(canonical->key);
    c.text = std::move(canonical->display);
    c.key = std::move(canonical->key);
    c.origin = origin;
    c.parent_id = parent;
    c.iteration = iteration;
    bank.concepts.push_back(std::move(c));
    ++added;
  }
  return added;
}

}  // namespace

bool ConceptBank::contains_key(std::string_view key) const {
  return std::any_of(concepts.begin(), concepts.end(),
                     [&](const Concept& c) { return c.key == key; });
}

const Concept* ConceptBank::find(std::string_view id) const {
  for (const auto& c : concepts) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::vector<Concept> ConceptBank::accepted() const {
  std::vector<Concept> out;
  for (const auto& c : concepts) {
    if (c.validated == Validation::kAccepted) out.push_back(c);
  }
  return out;
}

std::vector<std::string> Violations(const DomainSpec& domain) {
  std::vector<std::string> out;
  if (gateway::Trim(domain.name).empty()) out.push_back("domain name is empty");
  if (gateway::Trim(domain.description).empty()) out.push_back("domain description is empty");
  return out;
}

std::vector<std::string> Violations(const DiscoveryConfig& config) {
  std::vector<std::string> out;
  if (!(config.lambda1 > 0.0 && config.lambda1 < 1.0)) out.push_back("lambda1 outside (0,1)");
  if (!(config.lambda2 > 0.0 && config.lambda2 < 1.0)) out.push_back("lambda2 outside (0,1)");
  if (config.max_generation_rounds < 1) out.push_back("max_generation_rounds must be >= 1");
  if (config.max_expansion_rounds < 1) out.push_back("max_expansion_rounds must be >= 1");
  if (config.temperature < 0.0) out.push_back("temperature must be >= 0");
  if (config.templates.generation.empty()) out.push_back("generation template is empty");
  if (config.templates.expansion.find("{concept}") == std::string::npos) {
    out.push_back("expansion template lacks {concept}");
  }
  if (config.templates.validation.find("{concept}") == std::string::npos) {
    out.push_back("validation template lacks {concept}");
  }
  return out;
}

std::vector<std::string> Violations(const ConceptBank& bank) {
  std::vector<std::string> out;
  std::set<std::string> keys;
  std::set<std::string> ids;
  std::map<ConceptOrigin, std::set<int>> iterations;
  for (const auto& c : bank.concepts) {
    if (!keys.insert(c.key).second) out.push_back("duplicate concept key: " + c.key);
    ids.insert(c.id);
    iterations[c.origin].insert(c.iteration);
    if (c.origin == ConceptOrigin::kGenerated && c.parent_id) {
      out.push_back("generated concept with parent: " + c.text);
    }
    if (bank.phase == BankPhase::kValidated && c.validated == Validation::kPending) {
      out.push_back("unvalidated concept in validated bank: " + c.text);
    }
  }
  for (const auto& c : bank.concepts) {
    if (c.origin == ConceptOrigin::kExpanded && (!c.parent_id || !ids.count(*c.parent_id))) {
      out.push_back("expanded concept without a known parent: " + c.text);
    }
  }
  for (const auto& [origin, its] : iterations) {
    int expect = 0;
    for (int it : its) {
      if (it != expect++) {
        out.push_back(std::string("non-contiguous iterations for ") +
                      std::string(ToString(origin)) + " concepts");
        break;
      }
    }
  }
  return out;
}

PromptTemplates DefaultTemplates() {
  PromptTemplates t;
  t.system =
      "You are a knowledgeable assistant helping to assemble an image dataset about "
      "{domain_name}. Answer with plain lists and no commentary.";
  t.generation =
      "I need the categories for an image understanding dataset about {domain_name}. "
      "The categories are {domain_description}. Write a list of as many distinct "
      "{domain_description} as you can, one per line.";
  t.expansion =
      "Write a list of {domain_description} that are similar to \"{concept}\", one per line. "
      "Only include items that belong to {domain_name}.";
  t.validation =
      "Consider the domain \"{domain_name}\", whose members are {domain_description}. "
      "Does \"{concept}\" belong to it? Reply with yes or no.";
  return t;
}

std::string RenderTemplate(std::string_view tmpl, const DomainSpec& domain,
                           std::string_view concept_text) {
  static constexpr std::string_view kNames[] = {"{domain_name}", "{domain_description}",
                                                "{concept}"};
  const std::string_view values[] = {domain.name, domain.description, concept_text};
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (std::size_t k = 0; k < std::size(kNames); ++k) {
        if (tmpl.substr(i).starts_with(kNames[k])) {
          out += values[k];
          i += kNames[k].size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[i++]);
  }
  return out;
}

std::optional<CanonicalConcept> TryCanonicalize(std::string_view raw) {
  std::string text = gateway::StripListMarker(raw);
  text = gateway::StripQuotes(text);
  text = gateway::CollapseWhitespace(text);
  if (text.empty()) return std::nullopt;
  CanonicalConcept out;
  out.key = gateway::AsciiLower(text);
  out.display = std::move(text);
  return out;
}

CanonicalConcept CanonicalizeConcept(std::string_view raw) {
  auto c = TryCanonicalize(raw);
  if (!c) throw Error(ErrorKind::kInvalidConcept, "empty concept after normalization");
  return *c;
}

std::string ConceptId(std::string_view key) { return Hex64(HashFields({"concept", key})); }

std::int64_t ExpansionSeed(std::int64_t base_seed, std::string_view key) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(base_seed) + Fnv1a(key));
}

ConceptBank GenerateInitialConcepts(const DomainSpec& domain, gateway::ChatProvider& provider,
                                    const DiscoveryConfig& config) {
  if (auto v = Violations(domain); !v.empty()) throw Error(ErrorKind::kDomain, v.front());
  if (auto v = Violations(config); !v.empty()) throw Error(ErrorKind::kDomain, v.front());

  ConceptBank bank;
  bank.domain = domain;
  bank.generator = provider.identity();
  std::set<std::string> keys;
  const std::string prompt = RenderTemplate(config.templates.generation, domain);

  for (int round = 1; round <= config.max_generation_rounds; ++round) {
    ChatRequest request;
    request.messages = BaseMessages(config, domain);
    request.messages.push_back({Role::kUser, prompt});
    request.seed = config.base_seed + round;
    request.temperature = config.temperature;
    request.task = ChatTask::kGenerate;
    const std::string reply = AsStage("concept generation round " + std::to_string(round),
                                      [&] { return gateway::ChatComplete(provider, request); });
    bank.transcript.push_back({Role::kUser, prompt});
    bank.transcript.push_back({Role::kAssistant, reply});

    const std::size_t before = bank.concepts.size();
    const std::size_t gain =
        Absorb(bank, keys, reply, ConceptOrigin::kGenerated, std::nullopt, round - 1);
    bank.log.rounds.push_back({"generation", round, before, gain, 1});
    Log()->info("generation round {}: +{} (total {})", round, gain, bank.concepts.size());

    if (round == 1 && bank.concepts.empty()) {
      throw Error(ErrorKind::kEmptyDomain,
                  "no concepts after the first generation round for domain " + domain.name);
    }
    if (static_cast<double>(gain) < config.lambda1 * static_cast<double>(before)) break;
    if (round == config.max_generation_rounds) {
      bank.log.warnings.push_back("generation stopped at the round cap");
      Log()->warn("concept generation hit the cap of {} rounds", config.max_generation_rounds);
    }
  }
  bank.phase = BankPhase::kInitial;
  return bank;
}

ConceptBank ExpandConcepts(ConceptBank bank, gateway::ChatProvider& provider,
                           const DiscoveryConfig& config) {
  if (bank.phase != BankPhase::kInitial) {
    throw Error(ErrorKind::kDomain, "expansion needs a bank in the initial phase");
  }
  if (auto v = Violations(config); !v.empty()) throw Error(ErrorKind::kDomain, v.front());

  std::set<std::string> keys;
  for (const auto& c : bank.concepts) keys.insert(c.key);

  // Context: system prompt plus the most recent exchanges of generation.
  std::vector<ChatMessage> context = BaseMessages(config, bank.domain);
  {
    const std::size_t keep = std::min(bank.transcript.size(), 2 * config.history_turns);
    context.insert(context.end(), bank.transcript.end() - static_cast<std::ptrdiff_t>(keep),
                   bank.transcript.end());
  }

  // Concepts already expanded would get the same seed and context again, so
  // each round only expands what the previous round added.
  std::vector<std::size_t> frontier(bank.concepts.size());
  std::iota(frontier.begin(), frontier.end(), 0);

  for (int round = 0; round < config.max_expansion_rounds; ++round) {
    std::sort(frontier.begin(), frontier.end(), [&](std::size_t a, std::size_t b) {
      return bank.concepts[a].key < bank.concepts[b].key;
    });
    std::vector<Concept> parents;
    parents.reserve(frontier.size());
    for (auto i : frontier) parents.push_back(bank.concepts[i]);

    auto replies = ParallelMap(parents.size(), provider.max_in_flight(),
                               [&](std::size_t i) -> std::optional<std::string> {
      const Concept& parent = parents[i];
      ChatRequest request;
      request.messages = context;
      request.messages.push_back(
          {Role::kUser, RenderTemplate(config.templates.expansion, bank.domain, parent.text)});
      request.seed = ExpansionSeed(config.base_seed, parent.key);
      request.temperature = config.temperature;
      request.task = ChatTask::kExpand;
      request.subject = parent.text;
      try {
        return gateway::ChatComplete(provider, request);
      } catch (const Error& e) {
        if (!IsProviderFailure(e)) throw;
        Log()->warn("expansion of \"{}\" skipped: {}", parent.text, e.what());
        return std::nullopt;
      }
    });

    std::size_t failures = 0;
    for (const auto& r : replies) failures += r ? 0 : 1;
    bank.log.skipped_expansions += failures;
    if (!parents.empty() && failures == parents.size()) {
      throw Error(ErrorKind::kStage, "every expansion call failed in round " +
                                         std::to_string(round + 1));
    }

    const std::size_t before = bank.concepts.size();
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (!replies[i]) continue;
      Absorb(bank, keys, *replies[i], ConceptOrigin::kExpanded, parents[i].id, round);
    }
    const std::size_t gain = bank.concepts.size() - before;
    bank.log.rounds.push_back({"expansion", round + 1, before, gain, parents.size()});
    Log()->info("expansion round {}: +{} (total {})", round + 1, gain, bank.concepts.size());

    frontier.resize(gain);
    std::iota(frontier.begin(), frontier.end(), before);
    if (static_cast<double>(gain) < config.lambda2 * static_cast<double>(before)) break;
    if (round + 1 == config.max_expansion_rounds) {
      bank.log.warnings.push_back("expansion stopped at the round cap");
      Log()->warn("concept expansion hit the cap of {} rounds", config.max_expansion_rounds);
    }
  }
  bank.phase = BankPhase::kExpanded;
  return bank;
}

ConceptBank ValidateConcepts(ConceptBank bank, gateway::ChatProvider& validator,
                             const DiscoveryConfig& config) {
  if (bank.phase != BankPhase::kExpanded) {
    throw Error(ErrorKind::kDomain, "validation needs an expanded bank");
  }
  if (!bank.generator.empty() && validator.identity() == bank.generator) {
    throw Error(ErrorKind::kDomain,
                "validator must be a different model than the generator (" + bank.generator + ")");
  }

  auto ask = [&](const Concept& c, std::int64_t seed) {
    ChatRequest request;
    request.messages.push_back(
        {Role::kUser, RenderTemplate(config.templates.validation, bank.domain, c.text)});
    request.seed = seed;
    request.temperature = 0.0;
    request.task = ChatTask::kValidate;
    request.subject = c.text;
    return gateway::ParseBoolVerdict(AsStage("validation of \"" + c.text + "\"", [&] {
      return gateway::ChatComplete(validator, request);
    }));
  };

  struct Outcome {
    gateway::Verdict verdict = gateway::Verdict::kUnparseable;
  };
  auto outcomes = ParallelMap(bank.concepts.size(), validator.max_in_flight(), [&](std::size_t i) {
    const Concept& c = bank.concepts[i];
    auto verdict = ask(c, config.base_seed);
    if (verdict == gateway::Verdict::kUnparseable) verdict = ask(c, config.base_seed + 1);
    return Outcome{verdict};
  });

  bank.log.accepted = bank.log.rejected = bank.log.unparseable_verdicts = 0;
  for (std::size_t i = 0; i < bank.concepts.size(); ++i) {
    auto verdict = outcomes[i].verdict;
    if (verdict == gateway::Verdict::kUnparseable) ++bank.log.unparseable_verdicts;
    bool accept = verdict == gateway::Verdict::kTrue;
    bank.concepts[i].validated = accept ? Validation::kAccepted : Validation::kRejected;
    ++(accept ? bank.log.accepted : bank.log.rejected);
  }
  if (bank.log.unparseable_verdicts > 0) {
    Log()->warn("{} validator replies could not be parsed; counted as rejections",
                bank.log.unparseable_verdicts);
  }
  bank.phase = BankPhase::kValidated;
  return bank;
}

Json ToJson(const Concept& c) {
  return Json{{"id", c.id},
              {"text", c.text},
              {"key", c.key},
              {"origin", ToString(c.origin)},
              {"parent_id", c.parent_id ? Json(*c.parent_id) : Json(nullptr)},
              {"iteration", c.iteration},
              {"validated", ToString(c.validated)}};
}

Concept ConceptFromJson(const Json& j) {
  Concept c;
  try {
    c.id = j.at("id").get<std::string>();
    c.text = j.at("text").get<std::string>();
    c.key = j.at("key").get<std::string>();
    c.origin = ParseOrigin(j.at("origin").get<std::string>());
    if (j.contains("parent_id") && !j["parent_id"].is_null()) {
      c.parent_id = j["parent_id"].get<std::string>();
    }
    c.iteration = j.at("iteration").get<int>();
    c.validated = ParseValidation(j.at("validated").get<std::string>());
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("bad concept record: ") + e.what());
  }
  return c;
}

void WriteBank(const std::filesystem::path& path, const ConceptBank& bank) {
  std::vector<Json> rows;
  rows.reserve(bank.concepts.size());
  for (const auto& c : bank.concepts) rows.push_back(ToJson(c));
  Json transcript = Json::array();
  for (const auto& m : bank.transcript) {
    transcript.push_back({{"role", gateway::ToString(m.role)}, {"text", m.text}});
  }
  Json rounds = Json::array();
  for (const auto& r : bank.log.rounds) {
    rounds.push_back({{"phase", r.phase},
                      {"round", r.round},
                      {"size_before", r.size_before},
                      {"gain", r.gain},
                      {"calls", r.calls}});
  }
  Json meta = {{"domain", {{"name", bank.domain.name}, {"description", bank.domain.description}}},
               {"phase", ToString(bank.phase)},
               {"generator", bank.generator},
               {"transcript", transcript},
               {"log",
                {{"rounds", rounds},
                 {"skipped_expansions", bank.log.skipped_expansions},
                 {"unparseable_verdicts", bank.log.unparseable_verdicts},
                 {"accepted", bank.log.accepted},
                 {"rejected", bank.log.rejected},
                 {"warnings", bank.log.warnings}}}};
  io::WriteJsonl(path, rows);
  io::AtomicWrite(path.string() + ".meta.json", io::DumpPretty(meta));
}

ConceptBank ReadBank(const std::filesystem::path& path) {
  ConceptBank bank;
  for (const auto& row : io::ReadJsonl(path)) bank.concepts.push_back(ConceptFromJson(row));
  const std::filesystem::path meta_path = path.string() + ".meta.json";
  if (!std::filesystem::exists(meta_path)) {
    throw Error(ErrorKind::kFormat, "missing bank metadata " + meta_path.string());
  }
  try {
    Json meta = Json::parse(io::ReadFile(meta_path));
    bank.domain.name = meta.at("domain").at("name").get<std::string>();
    bank.domain.description = meta.at("domain").at("description").get<std::string>();
    bank.phase = ParsePhase(meta.at("phase").get<std::string>());
    bank.generator = meta.value("generator", "");
    for (const auto& m : meta.value("transcript", Json::array())) {
      auto role = m.at("role").get<std::string>();
      bank.transcript.push_back(
          {role == "assistant" ? Role::kAssistant : role == "system" ? Role::kSystem : Role::kUser,
           m.at("text").get<std::string>()});
    }
    const Json log = meta.value("log", Json::object());
    for (const auto& r : log.value("rounds", Json::array())) {
      bank.log.rounds.push_back({r.at("phase").get<std::string>(), r.at("round").get<int>(),
                                 r.at("size_before").get<std::size_t>(),
                                 r.at("gain").get<std::size_t>(), r.at("calls").get<std::size_t>()});
    }
    bank.log.skipped_expansions = log.value("skipped_expansions", std::size_t{0});
    bank.log.unparseable_verdicts = log.value("unparseable_verdicts", std::size_t{0});
    bank.log.accepted = log.value("accepted", std::size_t{0});
    bank.log.rejected = log.value("rejected", std::size_t{0});
    bank.log.warnings = log.value("warnings", std::vector<std::string>{});
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kFormat, meta_path.string() + ": " + e.what());
  }
  if (auto v = Violations(bank); !v.empty()) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + v.front());
  }
  return bank;
}

}  // namespace pas::discovery
