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
#include <set>

#include "pas/error.hpp"
#include "pas/io.hpp"
#include "pas/pipeline.hpp"

namespace pas::pipeline {

using Json = nlohmann::json;

std::string_view ToString(Stage stage) {
  switch (stage) {
    case Stage::kConcepts: return "concepts";
    case Stage::kExpand: return "expand";
    case Stage::kValidate: return "validate";
    case Stage::kRetrieve: return "retrieve";
    case Stage::kCaptions: return "captions";
    case Stage::kSynth: return "synth";
    case Stage::kMerge: return "merge";
    case Stage::kDedup: return "dedup";
    case Stage::kLeak: return "leak";
    case Stage::kScore: return "score";
    case Stage::kPrune: return "prune";
    case Stage::kManifest: return "manifest";
  }
  return "concepts";
}

Stage ParseStage(std::string_view name) {
  for (auto s : kAllStages) {
    if (ToString(s) == name) return s;
  }
  throw Error(ErrorKind::kFormat, "unknown stage: " + std::string(name));
}

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kCorruption: return 4;
    default: return 3;
  }
}

void PipelineConfig::ApplySeed(std::int64_t seed) {
  base_seed = seed;
  discovery.base_seed = seed;
  acquisition.base_seed = seed;
  dedup.rng_seed = seed;
}

Json InterpolateEnv(const Json& value, std::vector<std::string>& unresolved,
                    const std::string& pointer) {
  if (value.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : value.items()) out[k] = InterpolateEnv(v, unresolved, pointer + "/" + k);
    return out;
  }
  if (value.is_array()) {
    Json out = Json::array();
    for (std::size_t i = 0; i < value.size(); ++i) {
      out.push_back(InterpolateEnv(value[i], unresolved, pointer + "/" + std::to_string(i)));
    }
    return out;
  }
  if (!value.is_string()) return value;
  const auto& s = value.get_ref<const std::string&>();
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s.compare(i, 2, "${") == 0) {
      auto end = s.find('}', i + 2);
      if (end != std::string::npos) {
        const std::string name = s.substr(i + 2, end - i - 2);
        if (const char* env = std::getenv(name.c_str())) {
          out += env;
        } else {
          unresolved.push_back(pointer + ": " + name);
        }
        i = end + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

namespace {

// Reads typed fields and records problems instead of throwing.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  template <typename T>
  void Get(const Json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return;
    try {
      out = obj[key].get<T>();
    } catch (const Json::exception&) {
      errors_.push_back(where + "/" + key + ": wrong type (" + obj[key].dump() + ")");
    }
  }

  template <typename T>
  void GetOptional(const Json& obj, const char* key, std::optional<T>& out,
                   const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return;
    T value{};
    Get(obj, key, value, where);
    out = value;
  }

  const Json& Section(const Json& obj, const char* key, const std::string& where) {
    static const Json kEmpty = Json::object();
    if (!obj.contains(key) || obj[key].is_null()) return kEmpty;
    if (!obj[key].is_object()) {
      errors_.push_back(where + "/" + key + ": expected an object");
      return kEmpty;
    }
    return obj[key];
  }

  void Keys(const Json& obj, std::initializer_list<std::string_view> allowed,
            const std::string& where) {
    if (!obj.is_object()) return;
    std::set<std::string_view> ok(allowed);
    for (const auto& [k, v] : obj.items()) {
      if (!ok.count(k)) errors_.push_back((where.empty() ? "" : where) + "/" + k + ": unknown key");
    }
  }

 private:
  std::vector<std::string>& errors_;
};

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

PipelineConfig ParseConfig(const Json& raw_in, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  const Json raw = InterpolateEnv(raw_in, c.unresolved_env);
  Reader r(c.parse_errors);
  if (!raw.is_object()) {
    c.parse_errors.push_back("config must be a JSON object");
    return c;
  }
  r.Keys(raw, {"domain", "base_seed", "target_size", "discovery", "acquisition", "dedup", "leak",
               "ood", "stages", "paths", "providers", "mock"},
         "");

  const Json& domain = r.Section(raw, "domain", "");
  r.Keys(domain, {"name", "description"}, "/domain");
  r.Get(domain, "name", c.domain.name, "/domain");
  r.Get(domain, "description", c.domain.description, "/domain");

  std::int64_t seed = 0;
  r.Get(raw, "base_seed", seed, "");
  c.ApplySeed(seed);
  if (raw.contains("target_size") && !raw["target_size"].is_null()) {
    const auto& t = raw["target_size"];
    if (t.is_number_integer() && t.get<std::int64_t>() > 0) {
      c.target_size = t.get<std::size_t>();
    } else {
      c.parse_errors.push_back("/target_size: must be a positive integer");
    }
  }

  const Json& disc = r.Section(raw, "discovery", "");
  r.Keys(disc, {"lambda1", "lambda2", "max_generation_rounds", "max_expansion_rounds",
                "history_turns", "temperature", "templates"},
         "/discovery");
  r.Get(disc, "lambda1", c.discovery.lambda1, "/discovery");
  r.Get(disc, "lambda2", c.discovery.lambda2, "/discovery");
  r.Get(disc, "max_generation_rounds", c.discovery.max_generation_rounds, "/discovery");
  r.Get(disc, "max_expansion_rounds", c.discovery.max_expansion_rounds, "/discovery");
  r.Get(disc, "history_turns", c.discovery.history_turns, "/discovery");
  r.Get(disc, "temperature", c.discovery.temperature, "/discovery");
  const Json& tmpl = r.Section(disc, "templates", "/discovery");
  r.Keys(tmpl, {"system", "generation", "expansion", "validation"}, "/discovery/templates");
  r.Get(tmpl, "system", c.discovery.templates.system, "/discovery/templates");
  r.Get(tmpl, "generation", c.discovery.templates.generation, "/discovery/templates");
  r.Get(tmpl, "expansion", c.discovery.templates.expansion, "/discovery/templates");
  r.Get(tmpl, "validation", c.discovery.templates.validation, "/discovery/templates");

  const Json& acq = r.Section(raw, "acquisition", "");
  r.Keys(acq, {"per_concept_real", "n_cap", "n_synth", "caption_template", "caption_temperature"},
         "/acquisition");
  r.Get(acq, "per_concept_real", c.acquisition.per_concept_real, "/acquisition");
  r.Get(acq, "n_cap", c.acquisition.n_cap, "/acquisition");
  r.Get(acq, "n_synth", c.acquisition.n_synth, "/acquisition");
  r.Get(acq, "caption_template", c.acquisition.caption_template, "/acquisition");
  r.Get(acq, "caption_temperature", c.acquisition.caption_temperature, "/acquisition");

  const Json& dedup = r.Section(raw, "dedup", "");
  r.Keys(dedup, {"lambda_dup", "k"}, "/dedup");
  r.Get(dedup, "lambda_dup", c.dedup.lambda_dup, "/dedup");
  r.Get(dedup, "k", c.dedup.k, "/dedup");

  const Json& leak = r.Section(raw, "leak", "");
  r.Keys(leak, {"threshold", "k"}, "/leak");
  r.Get(leak, "threshold", c.leak.threshold, "/leak");
  r.Get(leak, "k", c.leak.k, "/leak");

  const Json& ood = r.Section(raw, "ood", "");
  r.Keys(ood, {"kneedle_sensitivity", "general_concepts", "general_bank_template", "batch_size"},
         "/ood");
  r.Get(ood, "kneedle_sensitivity", c.ood.kneedle_sensitivity, "/ood");
  r.Get(ood, "general_concepts", c.ood.general_concepts, "/ood");
  r.Get(ood, "general_bank_template", c.ood.general_bank_template, "/ood");
  r.Get(ood, "batch_size", c.ood.batch_size, "/ood");

  const Json& stages = r.Section(raw, "stages", "");
  r.Keys(stages, {"retrieve", "synth", "dedup", "leak", "score"}, "/stages");
  r.Get(stages, "retrieve", c.stages.retrieve, "/stages");
  r.Get(stages, "synth", c.stages.synth, "/stages");
  r.Get(stages, "dedup", c.stages.dedup, "/stages");
  r.Get(stages, "leak", c.stages.leak, "/stages");
  r.Get(stages, "score", c.stages.score, "/stages");

  const Json& paths = r.Section(raw, "paths", "");
  r.Keys(paths, {"workspace", "image_store", "copy_store", "protected_stores"}, "/paths");
  std::string workspace;
  r.Get(paths, "workspace", workspace, "/paths");
  if (!workspace.empty()) c.paths.workspace = Resolve(base_dir, workspace);
  std::optional<std::string> image_store;
  std::optional<std::string> copy_store;
  r.GetOptional(paths, "image_store", image_store, "/paths");
  r.GetOptional(paths, "copy_store", copy_store, "/paths");
  if (image_store) c.paths.image_store = Resolve(base_dir, *image_store);
  if (copy_store) c.paths.copy_store = Resolve(base_dir, *copy_store);
  std::vector<std::string> protected_stores;
  r.Get(paths, "protected_stores", protected_stores, "/paths");
  for (const auto& p : protected_stores) c.paths.protected_stores.push_back(Resolve(base_dir, p));

  const Json& providers = r.Section(raw, "providers", "");
  for (const auto& [role, value] : providers.items()) {
    const std::string where = "/providers/" + role;
    if (std::find(kProviderRoles.begin(), kProviderRoles.end(), role) == kProviderRoles.end()) {
      c.parse_errors.push_back(where + ": unknown provider role");
      continue;
    }
    if (!value.is_object()) {
      c.parse_errors.push_back(where + ": expected an object");
      continue;
    }
    r.Keys(value, {"base_url", "model", "api_key", "timeout_s", "max_retries", "max_in_flight",
                   "batch_size", "backoff_base_ms", "backoff_cap_ms"},
           where);
    gateway::ProviderEndpoint e;
    if (role == "text_embed") e.kind = gateway::ProviderKind::kTextEmbed;
    if (role == "image_embed") e.kind = gateway::ProviderKind::kImageEmbed;
    if (role == "image_gen") e.kind = gateway::ProviderKind::kImageGen;
    if (role == "ood_prob") e.kind = gateway::ProviderKind::kOodProb;
    r.Get(value, "base_url", e.base_url, where);
    r.Get(value, "model", e.model_name, where);
    r.GetOptional(value, "api_key", e.auth_token, where);
    double timeout_s = 60.0;
    r.Get(value, "timeout_s", timeout_s, where);
    e.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
    r.Get(value, "max_retries", e.max_retries, where);
    r.Get(value, "max_in_flight", e.max_in_flight, where);
    r.Get(value, "batch_size", e.batch_size, where);
    std::int64_t base_ms = e.backoff_base.count();
    std::int64_t cap_ms = e.backoff_cap.count();
    r.Get(value, "backoff_base_ms", base_ms, where);
    r.Get(value, "backoff_cap_ms", cap_ms, where);
    e.backoff_base = std::chrono::milliseconds(base_ms);
    e.backoff_cap = std::chrono::milliseconds(cap_ms);
    c.providers[role] = std::move(e);
  }

  const Json& mock = r.Section(raw, "mock", "");
  r.Keys(mock, {"vocabulary_size", "text_dim", "copy_dim", "text_model_tag", "copy_model_tag"},
         "/mock");
  r.Get(mock, "vocabulary_size", c.mock.vocabulary_size, "/mock");
  r.Get(mock, "text_dim", c.mock.text_dim, "/mock");
  r.Get(mock, "copy_dim", c.mock.copy_dim, "/mock");
  r.Get(mock, "text_model_tag", c.mock.text_model_tag, "/mock");
  r.Get(mock, "copy_model_tag", c.mock.copy_model_tag, "/mock");
  return c;
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  Json raw;
  try {
    raw = Json::parse(io::ReadFile(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  return ParseConfig(raw, std::filesystem::absolute(path).parent_path());
}

Json ConfigToJson(const PipelineConfig& c, bool redact) {
  Json providers = Json::object();
  for (const auto& [role, e] : c.providers) {
    Json p = {{"base_url", e.base_url},
              {"model", e.model_name},
              {"timeout_s", static_cast<double>(e.timeout.count()) / 1000.0},
              {"max_retries", e.max_retries},
              {"max_in_flight", e.max_in_flight},
              {"batch_size", e.batch_size},
              {"backoff_base_ms", e.backoff_base.count()},
              {"backoff_cap_ms", e.backoff_cap.count()}};
    if (e.auth_token) p["api_key"] = redact ? std::string("***") : *e.auth_token;
    providers[role] = std::move(p);
  }
  auto opt_path = [](const std::optional<std::filesystem::path>& p) {
    return p ? Json(p->string()) : Json(nullptr);
  };
  Json protected_stores = Json::array();
  for (const auto& p : c.paths.protected_stores) protected_stores.push_back(p.string());
  const auto& t = c.discovery.templates;
  return Json{
      {"domain", {{"name", c.domain.name}, {"description", c.domain.description}}},
      {"base_seed", c.base_seed},
      {"target_size", c.target_size ? Json(*c.target_size) : Json(nullptr)},
      {"discovery",
       {{"lambda1", c.discovery.lambda1},
        {"lambda2", c.discovery.lambda2},
        {"max_generation_rounds", c.discovery.max_generation_rounds},
        {"max_expansion_rounds", c.discovery.max_expansion_rounds},
        {"history_turns", c.discovery.history_turns},
        {"temperature", c.discovery.temperature},
        {"templates",
         {{"system", t.system},
          {"generation", t.generation},
          {"expansion", t.expansion},
          {"validation", t.validation}}}}},
      {"acquisition",
       {{"per_concept_real", c.acquisition.per_concept_real},
        {"n_cap", c.acquisition.n_cap},
        {"n_synth", c.acquisition.n_synth},
        {"caption_template", c.acquisition.caption_template},
        {"caption_temperature", c.acquisition.caption_temperature}}},
      {"dedup", {{"lambda_dup", c.dedup.lambda_dup}, {"k", c.dedup.k}}},
      {"leak", {{"threshold", c.leak.threshold}, {"k", c.leak.k}}},
      {"ood",
       {{"kneedle_sensitivity", c.ood.kneedle_sensitivity},
        {"general_concepts", c.ood.general_concepts},
        {"general_bank_template", c.ood.general_bank_template},
        {"batch_size", c.ood.batch_size}}},
      {"stages",
       {{"retrieve", c.stages.retrieve},
        {"synth", c.stages.synth},
        {"dedup", c.stages.dedup},
        {"leak", c.stages.leak},
        {"score", c.stages.score}}},
      {"paths",
       {{"workspace", c.paths.workspace.string()},
        {"image_store", opt_path(c.paths.image_store)},
        {"copy_store", opt_path(c.paths.copy_store)},
        {"protected_stores", protected_stores}}},
      {"providers", providers},
      {"mock",
       {{"vocabulary_size", c.mock.vocabulary_size},
        {"text_dim", c.mock.text_dim},
        {"copy_dim", c.mock.copy_dim},
        {"text_model_tag", c.mock.text_model_tag},
        {"copy_model_tag", c.mock.copy_model_tag}}}};
}

std::vector<std::string> ValidateConfig(const PipelineConfig& c, bool offline) {
  std::vector<std::string> out = c.parse_errors;
  for (const auto& u : c.unresolved_env) {
    if (offline && u.starts_with("/providers/")) continue;
    out.push_back("environment variable not set: " + u);
  }
  auto append = [&](std::vector<std::string> v) {
    std::move(v.begin(), v.end(), std::back_inserter(out));
  };
  append(discovery::Violations(c.domain));
  append(discovery::Violations(c.discovery));
  append(acquisition::Violations(c.acquisition));
  append(curation::Violations(c.dedup));
  append(curation::Violations(c.leak));
  if (!(c.ood.kneedle_sensitivity > 0.0)) out.push_back("kneedle_sensitivity must be > 0");
  if (c.ood.batch_size < 1) out.push_back("ood batch_size must be >= 1");
  if (c.target_size && *c.target_size < 1) out.push_back("target_size must be >= 1");
  if (c.discovery.history_turns < 1) out.push_back("history_turns must be >= 1");

  if (c.paths.workspace.empty()) out.push_back("paths.workspace is required");
  auto need_file = [&](const std::optional<std::filesystem::path>& p, std::string_view what) {
    if (!p) {
      out.push_back(std::string(what) + " is required");
    } else if (!std::filesystem::exists(*p)) {
      out.push_back(std::string(what) + " does not exist: " + p->string());
    }
  };
  if (c.stages.retrieve) need_file(c.paths.image_store, "paths.image_store");
  if (c.paths.copy_store && !std::filesystem::exists(*c.paths.copy_store)) {
    out.push_back("paths.copy_store does not exist: " + c.paths.copy_store->string());
  }
  for (const auto& p : c.paths.protected_stores) {
    if (!std::filesystem::exists(p)) out.push_back("protected store does not exist: " + p.string());
  }

  if (offline) {
    if (c.mock.vocabulary_size < 2 || c.mock.vocabulary_size > 400) {
      out.push_back("mock.vocabulary_size must be in [2, 400]");
    }
    if (c.mock.text_dim < 1 || c.mock.copy_dim < 1) out.push_back("mock dimensions must be >= 1");
    return out;
  }

  auto need = [&](std::string_view stage, std::string_view role) {
    if (!c.providers.count(std::string(role))) {
      out.push_back("stage " + std::string(stage) + " needs a '" + std::string(role) +
                    "' provider endpoint");
    }
  };
  need("concepts", "chat");
  need("validate", "validator");
  if (c.stages.retrieve) need("retrieve", "text_embed");
  if (c.stages.synth) need("synth", "image_gen");
  if (c.stages.dedup || c.stages.leak) {
    if (!c.providers.count("image_embed")) {
      out.push_back(std::string("stage ") + (c.stages.dedup ? "dedup" : "leak") +
                    " needs an 'image_embed' provider endpoint");
    }
  }
  if (c.stages.score) need("score", "ood_prob");
  for (const auto& [role, e] : c.providers) append(gateway::Violations(e, "providers." + role));
  auto chat = c.providers.find("chat");
  auto validator = c.providers.find("validator");
  if (chat != c.providers.end() && validator != c.providers.end() &&
      chat->second.model_name == validator->second.model_name) {
    out.push_back("validator model must differ from the chat model (" +
                  chat->second.model_name + ")");
  }
  return out;
}

}  // namespace pas::pipeline
