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

#include "pas/model_gateway.hpp"

#include <cmath>
#include <cstdlib>

#include "pas/error.hpp"
#include "pas/log.hpp"

namespace pas::gateway {

std::string_view ToString(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::kChat: return "chat";
    case ProviderKind::kTextEmbed: return "text_embed";
    case ProviderKind::kImageEmbed: return "image_embed";
    case ProviderKind::kImageGen: return "image_gen";
    case ProviderKind::kOodProb: return "ood_prob";
  }
  return "chat";
}

ProviderKind ParseProviderKind(std::string_view name) {
  for (auto kind : {ProviderKind::kChat, ProviderKind::kTextEmbed, ProviderKind::kImageEmbed,
                    ProviderKind::kImageGen, ProviderKind::kOodProb}) {
    if (ToString(kind) == name) return kind;
  }
  throw Error(ErrorKind::kConfig, "unknown provider kind: " + std::string(name));
}

std::string_view ToString(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

std::vector<std::string> Violations(const ProviderEndpoint& endpoint, std::string_view label) {
  std::vector<std::string> out;
  auto add = [&](const std::string& what) { out.push_back(std::string(label) + ": " + what); };
  if (endpoint.timeout.count() <= 0) add("timeout must be > 0");
  if (endpoint.max_retries < 0) add("max_retries must be >= 0");
  if (endpoint.max_in_flight < 1) add("max_in_flight must be >= 1");
  if (endpoint.batch_size < 1) add("batch_size must be >= 1");
  if (endpoint.base_url.empty()) add("base_url is empty");
  if (endpoint.backoff_base.count() < 0 || endpoint.backoff_cap.count() < 0) {
    add("backoff durations must be >= 0");
  }
  return out;
}

std::string_view PromptText(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == Role::kUser) return it->text;
  }
  return {};
}

void ValidateRow(const OODProbRow& row, std::size_t concept_count) {
  auto fail = [&](const std::string& what) {
    throw ProtocolError(0, "probability row for image " + row.image_id + ": " + what);
  };
  if (row.p.size() != concept_count || row.p_no.size() != concept_count) {
    fail("expected " + std::to_string(concept_count) + " entries, got p=" +
         std::to_string(row.p.size()) + " p_no=" + std::to_string(row.p_no.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < concept_count; ++i) {
    if (!(row.p[i] >= 0.0 && row.p[i] <= 1.0)) fail("p[" + std::to_string(i) + "] outside [0,1]");
    if (!(row.p_no[i] >= 0.0 && row.p_no[i] <= 1.0)) {
      fail("p_no[" + std::to_string(i) + "] outside [0,1]");
    }
    sum += row.p[i];
  }
  if (std::abs(sum - 1.0) > 1e-6) fail("p sums to " + std::to_string(sum));
}

std::string ChatComplete(ChatProvider& provider, const ChatRequest& request) {
  if (request.messages.empty()) throw Error(ErrorKind::kDomain, "chat request without messages");
  if (request.messages.front().role == Role::kAssistant) {
    throw Error(ErrorKind::kDomain, "chat request must start with a system or user message");
  }
  if (request.temperature < 0.0) throw Error(ErrorKind::kDomain, "negative temperature");
  return provider.Complete(request);
}

std::vector<EmbedItemResult> EmbedBatch(EmbeddingProvider& provider,
                                        std::span<const std::string> items,
                                        std::size_t batch_size) {
  if (items.empty()) throw Error(ErrorKind::kDomain, "embedding request without items");
  if (batch_size == 0) throw Error(ErrorKind::kDomain, "batch_size must be positive");
  std::vector<EmbedItemResult> out;
  out.reserve(items.size());
  std::optional<std::size_t> dim;
  for (std::size_t begin = 0; begin < items.size(); begin += batch_size) {
    auto chunk = items.subspan(begin, std::min(batch_size, items.size() - begin));
    auto results = provider.EmbedChunk(chunk);
    if (results.size() != chunk.size()) {
      throw ProtocolError(0, "embedding reply has " + std::to_string(results.size()) +
                                 " entries for " + std::to_string(chunk.size()) + " items");
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      auto& r = results[i];
      if (r.ok()) {
        if (r.vector.empty()) {
          r.error = "empty embedding";
        } else if (!dim) {
          dim = r.vector.size();
        } else if (*dim != r.vector.size()) {
          throw ProtocolError(0, "embedding dimension mismatch for item " +
                                     std::to_string(begin + i) + ": " +
                                     std::to_string(r.vector.size()) + " vs " +
                                     std::to_string(*dim));
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

GenerationResult GenerateImages(ImageGenProvider& provider, const std::string& prompt,
                                std::size_t n, std::int64_t seed) {
  if (n == 0) throw Error(ErrorKind::kDomain, "image generation needs n >= 1");
  auto result = provider.Generate(prompt, n, seed);
  if (result.uris.size() > n) {
    throw ProtocolError(0, "generator returned " + std::to_string(result.uris.size()) +
                               " images for n=" + std::to_string(n));
  }
  result.failed = n - result.uris.size();
  if (result.uris.empty()) {
    throw Error(ErrorKind::kStage, "image generation produced nothing for prompt: " + prompt);
  }
  if (result.failed > 0) {
    Log()->warn("image generation: {} of {} images failed", result.failed, n);
  }
  return result;
}

std::vector<OODProbRow> OodProbabilities(OodProvider& provider,
                                         std::span<const std::string> image_uris,
                                         std::span<const std::string> concepts, bool blur_text,
                                         std::size_t batch_size) {
  if (concepts.empty()) throw Error(ErrorKind::kDomain, "OOD query without concepts");
  if (batch_size == 0) throw Error(ErrorKind::kDomain, "batch_size must be positive");
  std::vector<OODProbRow> out;
  out.reserve(image_uris.size());
  for (std::size_t begin = 0; begin < image_uris.size(); begin += batch_size) {
    auto chunk = image_uris.subspan(begin, std::min(batch_size, image_uris.size() - begin));
    auto rows = provider.Query(chunk, concepts, blur_text);
    if (rows.size() != chunk.size()) {
      throw ProtocolError(0, "OOD reply has " + std::to_string(rows.size()) + " rows for " +
                                 std::to_string(chunk.size()) + " images");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].image_id != chunk[i]) {
        throw ProtocolError(0, "OOD row " + std::to_string(begin + i) + " is for " +
                                   rows[i].image_id + ", expected " + chunk[i]);
      }
      ValidateRow(rows[i], concepts.size());
      out.push_back(std::move(rows[i]));
    }
  }
  return out;
}

bool OfflineFromEnv() {
  const char* env = std::getenv("PAS_OFFLINE");
  if (!env) return false;
  std::string v = AsciiLower(env);
  return v == "1" || v == "true" || v == "yes";
}

}  // namespace pas::gateway
