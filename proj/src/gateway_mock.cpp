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
#include <numbers>
#include <random>

#include "pas/error.hpp"
#include "pas/hashing.hpp"
#include "pas/model_gateway.hpp"

namespace pas::gateway {

namespace {

// Portable uniform doubles from a splitmix64 stream; std distributions are
// not specified bit-for-bit across standard libraries.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t Next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return Mix64(state_);
  }
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  double Gaussian() {
    double u1 = Uniform();
    double u2 = Uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::size_t Below(std::size_t n) { return static_cast<std::size_t>(Uniform() * n); }

 private:
  std::uint64_t state_;
};

double UnitHash(std::initializer_list<std::string_view> fields) {
  return static_cast<double>(Mix64(HashFields(fields)) >> 11) * 0x1.0p-53;
}

constexpr const char* kAdjectives[] = {
    "Crimson", "Golden", "Silver", "Azure",   "Emerald", "Ivory",  "Copper",
    "Scarlet", "Amber",  "Cobalt", "Jade",    "Onyx",    "Coral",  "Saffron",
    "Teal",    "Umber",  "Violet", "Indigo",  "Russet",  "Slate"};
constexpr const char* kNouns[] = {"Crest",  "Plume",   "Dune",  "Ridge",  "Brook",
                                  "Grove",  "Meadow",  "Harbor", "Summit", "Canyon",
                                  "Fjord",  "Glade",   "Marsh", "Prairie", "Tundra",
                                  "Delta",  "Lagoon",  "Mesa",  "Reef",   "Vale"};
constexpr const char* kGeneral[] = {"person", "building", "vehicle", "animal", "plant",
                                    "furniture", "text document", "landscape", "tool",
                                    "clothing", "electronic device", "food"};
constexpr const char* kStyles[] = {"close-up", "wide-angle", "candid", "studio", "overhead"};
constexpr const char* kScenes[] = {"at dawn", "under soft light", "on a rainy afternoon",
                                   "in its natural setting", "beside a quiet lake",
                                   "at golden hour"};

std::string Key(std::string_view s) { return AsciiLower(CollapseWhitespace(StripQuotes(s))); }

}  // namespace

std::uint64_t ChatFingerprint(std::int64_t seed, std::string_view prompt) {
  return HashFields({"chat", std::to_string(seed), Hex64(Fnv1a(prompt))});
}

void ScriptedChat::Add(std::int64_t seed, std::string_view prompt, std::string reply) {
  std::lock_guard lock(mutex_);
  script_[ChatFingerprint(seed, prompt)] = std::move(reply);
}

std::string ScriptedChat::Complete(const ChatRequest& request) {
  CountCall();
  std::lock_guard lock(mutex_);
  auto it = script_.find(ChatFingerprint(request.seed, PromptText(request)));
  if (it == script_.end()) {
    throw Error(ErrorKind::kMockScript, "no scripted reply for seed " +
                                            std::to_string(request.seed) + " prompt \"" +
                                            std::string(PromptText(request)) + "\"");
  }
  return it->second;
}

// ---------------------------------------------------------------------------

SyntheticDomainChat::SyntheticDomainChat(std::string identity, SyntheticDomainOptions options)
    : identity_(std::move(identity)), options_(options) {
  constexpr std::size_t kA = std::size(kAdjectives);
  constexpr std::size_t kN = std::size(kNouns);
  if (options_.vocabulary_size < 2 || options_.vocabulary_size > kA * kN) {
    throw Error(ErrorKind::kConfig, "synthetic vocabulary size must be in [2, 400]");
  }
  for (std::size_t i = 0; i < options_.vocabulary_size; ++i) {
    std::string name = std::string(kAdjectives[i % kA]) + " " + kNouns[(i / kA + 3 * i) % kN];
    vocab_index_[Key(name)] = i;
    vocabulary_.push_back(std::move(name));
  }
  for (std::size_t i = 0; i < options_.decoys; ++i) {
    std::string name = "Unrelated Gadget " + std::to_string(i + 1);
    decoy_index_[Key(name)] = i;
    decoys_.push_back(std::move(name));
  }
}

std::string SyntheticDomainChat::Complete(const ChatRequest& request) {
  CountCall();
  SplitMix rng(Mix64(static_cast<std::uint64_t>(request.seed)) ^ Fnv1a(request.subject));
  const std::size_t v = vocabulary_.size();
  const std::string subject_key = Key(request.subject);
  std::string reply;

  switch (request.task) {
    case ChatTask::kGenerate: {
      // Samples from the first half of the vocabulary; the rest is only
      // reachable through expansion.
      const std::size_t half = std::max<std::size_t>(1, v / 2);
      reply = "Here are some concepts:\n";
      std::size_t count = std::min(options_.per_round, half);
      std::vector<std::size_t> pool(half);
      for (std::size_t i = 0; i < half; ++i) pool[i] = i;
      for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + rng.Below(half - i);
        std::swap(pool[i], pool[j]);
        std::string name = vocabulary_[pool[i]];
        if (rng.Uniform() < 0.15) name = AsciiLower(name);
        reply += std::to_string(i + 1) + ". " + name + "\n";
      }
      if (!decoys_.empty() && rng.Uniform() < 0.5) {
        reply += std::to_string(count + 1) + ". \"" + decoys_[rng.Below(decoys_.size())] + "\"\n";
      }
      break;
    }
    case ChatTask::kExpand: {
      auto it = vocab_index_.find(subject_key);
      if (it == vocab_index_.end()) break;  // decoys and unknown concepts expand to nothing
      const std::size_t i = it->second;
      for (std::size_t j : {(i + 1) % v, (i + v / 2) % v, (i + v - 1) % v}) {
        reply += "- " + vocabulary_[j] + "\n";
      }
      break;
    }
    case ChatTask::kValidate: {
      if (vocab_index_.count(subject_key)) {
        reply = "Yes, that is a valid example.";
      } else if (auto d = decoy_index_.find(subject_key); d != decoy_index_.end()) {
        reply = d->second == 0 ? "Hard to say." : "No, that does not belong to the domain.";
      } else {
        reply = "No.";
      }
      break;
    }
    case ChatTask::kCaption: {
      reply = std::string("A ") + kStyles[rng.Below(std::size(kStyles))] + " photograph of " +
              request.subject + " " + kScenes[rng.Below(std::size(kScenes))] + ".";
      break;
    }
    case ChatTask::kGeneralBank: {
      for (std::size_t i = 0; i < std::size(kGeneral); ++i) {
        reply += std::to_string(i + 1) + ". " + kGeneral[i] + "\n";
      }
      break;
    }
    case ChatTask::kUnspecified:
      reply = "OK.";
      break;
  }
  return reply;
}

// ---------------------------------------------------------------------------

std::vector<float> HashVector(std::string_view text, std::size_t dim) {
  SplitMix rng(HashFields({"vec", text}));
  std::vector<float> out(dim);
  for (auto& x : out) x = static_cast<float>(rng.Gaussian());
  return out;
}

std::vector<EmbedItemResult> HashEmbedder::EmbedChunk(std::span<const std::string> items) {
  CountCall();
  std::vector<EmbedItemResult> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    EmbedItemResult r;
    if (fail_ && fail_(item)) {
      r.error = "mock failure for " + item;
    } else {
      r.vector = HashVector(AsciiLower(CollapseWhitespace(item)), dim_);
    }
    out.push_back(std::move(r));
  }
  return out;
}

GenerationResult MockImageGen::Generate(const std::string& prompt, std::size_t n,
                                        std::int64_t seed) {
  CountCall();
  GenerationResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (fail_ && fail_(prompt, i)) {
      ++out.failed;
      continue;
    }
    out.uris.push_back("mock://synth/" +
                       Hex64(HashFields({prompt, std::to_string(seed), std::to_string(i)})) +
                       ".png");
  }
  return out;
}

bool MockOod::HasText(std::string_view uri) { return Fnv1a(uri) % 10 == 3; }

std::vector<OODProbRow> MockOod::Query(std::span<const std::string> image_uris,
                                       std::span<const std::string> concepts, bool blur_text) {
  CountCall();
  std::string concept_sig;
  for (const auto& c : concepts) concept_sig += c + "\x1f";
  std::vector<OODProbRow> rows;
  rows.reserve(image_uris.size());
  for (const auto& uri : image_uris) {
    OODProbRow row;
    row.image_id = uri;
    // Most images sit in-domain; a heavy tail does not.
    double outlier = std::pow(UnitHash({"outlier", uri}), 4.0);
    const bool has_text = HasText(uri);
    row.text_detected = has_text;
    if (blur_text && has_text) outlier = std::min(1.0, outlier + 0.4 * UnitHash({"blur", uri}));

    std::vector<double> logits(concepts.size());
    double max_logit = -1e300;
    for (std::size_t j = 0; j < concepts.size(); ++j) {
      logits[j] = 3.0 * UnitHash({"logit", uri, concepts[j]});
      max_logit = std::max(max_logit, logits[j]);
    }
    double total = 0.0;
    row.p.resize(concepts.size());
    for (std::size_t j = 0; j < concepts.size(); ++j) {
      row.p[j] = std::exp(logits[j] - max_logit);
      total += row.p[j];
    }
    for (auto& x : row.p) x /= total;
    row.p_no.resize(concepts.size());
    for (std::size_t j = 0; j < concepts.size(); ++j) {
      double noise = 0.1 * UnitHash({"no", uri, concepts[j], concept_sig.substr(0, 64)});
      row.p_no[j] = std::clamp(outlier + noise, 0.0, 1.0);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pas::gateway
