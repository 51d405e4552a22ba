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

#ifndef PAS_MODEL_GATEWAY_HPP_
#define PAS_MODEL_GATEWAY_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pas::gateway {

enum class ProviderKind { kChat, kTextEmbed, kImageEmbed, kImageGen, kOodProb };

std::string_view ToString(ProviderKind kind);
ProviderKind ParseProviderKind(std::string_view name);

struct ProviderEndpoint {
  ProviderKind kind = ProviderKind::kChat;
  std::string base_url;
  std::string model_name;
  std::optional<std::string> auth_token;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  int max_in_flight = 4;
  std::chrono::milliseconds backoff_base{250};
  std::chrono::milliseconds backoff_cap{8000};
  std::size_t batch_size = 64;
};

/// Every broken invariant of an endpoint, prefixed with `label`.
std::vector<std::string> Violations(const ProviderEndpoint& endpoint, std::string_view label);

// ---------------------------------------------------------------------------
// Requests and rows

enum class Role { kSystem, kUser, kAssistant };
std::string_view ToString(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string text;
};

/// What a chat call is for. Never sent over the wire; the offline mock uses it
/// to pick a reply shape without parsing prompts.
enum class ChatTask { kUnspecified, kGenerate, kExpand, kValidate, kCaption, kGeneralBank };

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  std::int64_t seed = 0;
  ChatTask task = ChatTask::kUnspecified;
  std::string subject;  // concept under expansion/validation/captioning (mock metadata)
};

/// Text of the last user message; what the mock fingerprint hashes.
std::string_view PromptText(const ChatRequest& request);

struct EmbedItemResult {
  std::vector<float> vector;
  std::optional<std::string> error;
  bool ok() const { return !error.has_value(); }
};

struct GenerationResult {
  std::vector<std::string> uris;
  std::size_t failed = 0;
};

/// Zero-shot probabilities for one image over a concept list. `p` is a
/// softmax over the list; `p_no` holds independent "does not contain"
/// probabilities. `text_detected` is only meaningful on blurred queries.
struct OODProbRow {
  std::string image_id;
  std::vector<double> p;
  std::vector<double> p_no;
  bool text_detected = true;
};

/// Throws ProtocolError naming the image when the row breaks its invariants.
void ValidateRow(const OODProbRow& row, std::size_t concept_count);

// ---------------------------------------------------------------------------
// Provider interfaces. Implementations are safe for concurrent use.

class CallCounted {
 public:
  virtual ~CallCounted() = default;
  std::size_t calls() const { return calls_.load(); }

 protected:
  void CountCall() { calls_.fetch_add(1); }

 private:
  std::atomic<std::size_t> calls_{0};
};

class ChatProvider : public CallCounted {
 public:
  virtual std::string Complete(const ChatRequest& request) = 0;
  /// Model identity, used to check that the validator differs from the generator.
  virtual std::string identity() const = 0;
  virtual std::size_t max_in_flight() const { return 1; }
};

class EmbeddingProvider : public CallCounted {
 public:
  /// One result per item, in order. Dimension checks happen in EmbedBatch.
  virtual std::vector<EmbedItemResult> EmbedChunk(std::span<const std::string> items) = 0;
  virtual std::string model_tag() const = 0;
  virtual std::size_t max_in_flight() const { return 1; }
};

class ImageGenProvider : public CallCounted {
 public:
  virtual GenerationResult Generate(const std::string& prompt, std::size_t n,
                                    std::int64_t seed) = 0;
  virtual std::size_t max_in_flight() const { return 1; }
};

class OodProvider : public CallCounted {
 public:
  virtual std::vector<OODProbRow> Query(std::span<const std::string> image_uris,
                                        std::span<const std::string> concepts,
                                        bool blur_text) = 0;
};

// ---------------------------------------------------------------------------
// Operations over providers

std::string ChatComplete(ChatProvider& provider, const ChatRequest& request);

/// Splits `items` into chunks of `batch_size`, concatenates the results and
/// checks that every successful vector has the same dimension.
std::vector<EmbedItemResult> EmbedBatch(EmbeddingProvider& provider,
                                        std::span<const std::string> items,
                                        std::size_t batch_size);

/// n must be positive; zero successful images is a stage error.
GenerationResult GenerateImages(ImageGenProvider& provider, const std::string& prompt,
                                std::size_t n, std::int64_t seed);

std::vector<OODProbRow> OodProbabilities(OodProvider& provider,
                                         std::span<const std::string> image_uris,
                                         std::span<const std::string> concepts, bool blur_text,
                                         std::size_t batch_size);

// ---------------------------------------------------------------------------
// Reply parsing

std::string Trim(std::string_view s);
std::string CollapseWhitespace(std::string_view s);
/// Drops a leading "1.", "2)", "(3)", "-", "*", "+" or bullet marker.
std::string StripListMarker(std::string_view s, bool* stripped = nullptr);
/// Drops surrounding ASCII or typographic quotes and markdown emphasis.
std::string StripQuotes(std::string_view s);
std::string AsciiLower(std::string_view s);

struct ConceptListParse {
  std::vector<std::string> items;
  bool empty_reply() const { return items.empty(); }
};

/// Numbered, bulleted, comma-separated and one-per-line replies.
ConceptListParse ParseConceptList(std::string_view reply);

enum class Verdict { kTrue, kFalse, kUnparseable };
Verdict ParseBoolVerdict(std::string_view reply);

// ---------------------------------------------------------------------------
// HTTP

struct HttpResponse {
  int status = 0;
  std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws Error(kTransport) when no HTTP response was obtained.
  virtual HttpResponse Post(const std::string& base_url, const std::string& path,
                            const std::string& body, const Headers& headers,
                            std::chrono::milliseconds timeout) = 0;
};

class HttplibTransport final : public Transport {
 public:
  HttpResponse Post(const std::string& base_url, const std::string& path,
                    const std::string& body, const Headers& headers,
                    std::chrono::milliseconds timeout) override;
  /// Process-wide count of connection attempts; stays zero in offline runs.
  static std::size_t ConnectionAttempts();
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Backoff for attempt `retry` (0-based): min(cap, base * 2^retry) scaled by
/// a jitter factor in [0.5, 1].
std::chrono::milliseconds BackoffDelay(const ProviderEndpoint& endpoint, int retry, double jitter);

/// POST with retries on transport failures, 429 and 5xx. Other non-2xx
/// replies become ProtocolError immediately.
HttpResponse PostWithRetry(Transport& transport, const ProviderEndpoint& endpoint,
                           const std::string& path, const std::string& body,
                           const Sleeper& sleeper = {});

class AdmissionGate {
 public:
  explicit AdmissionGate(int limit) : sem_(std::max(1, limit)) {}
  void acquire() { sem_.acquire(); }
  void release() { sem_.release(); }

 private:
  std::counting_semaphore<4096> sem_;
};

class HttpChatProvider final : public ChatProvider {
 public:
  HttpChatProvider(ProviderEndpoint endpoint, std::shared_ptr<Transport> transport,
                   Sleeper sleeper = {});
  std::string Complete(const ChatRequest& request) override;
  std::string identity() const override { return endpoint_.model_name; }
  std::size_t max_in_flight() const override { return endpoint_.max_in_flight; }

 private:
  ProviderEndpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  AdmissionGate gate_;
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(ProviderEndpoint endpoint, std::shared_ptr<Transport> transport,
                        Sleeper sleeper = {});
  std::vector<EmbedItemResult> EmbedChunk(std::span<const std::string> items) override;
  std::string model_tag() const override { return endpoint_.model_name; }
  std::size_t max_in_flight() const override { return endpoint_.max_in_flight; }

 private:
  ProviderEndpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  AdmissionGate gate_;
};

class HttpImageGenProvider final : public ImageGenProvider {
 public:
  HttpImageGenProvider(ProviderEndpoint endpoint, std::shared_ptr<Transport> transport,
                       Sleeper sleeper = {});
  GenerationResult Generate(const std::string& prompt, std::size_t n, std::int64_t seed) override;
  std::size_t max_in_flight() const override { return endpoint_.max_in_flight; }

 private:
  ProviderEndpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  AdmissionGate gate_;
};

class HttpOodProvider final : public OodProvider {
 public:
  HttpOodProvider(ProviderEndpoint endpoint, std::shared_ptr<Transport> transport,
                  Sleeper sleeper = {});
  std::vector<OODProbRow> Query(std::span<const std::string> image_uris,
                                std::span<const std::string> concepts, bool blur_text) override;

 private:
  ProviderEndpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  AdmissionGate gate_;
};

// ---------------------------------------------------------------------------
// Mocks

/// True when PAS_OFFLINE=1 (or "true").
bool OfflineFromEnv();

/// Fingerprint of a chat request: (kind, seed, hash of the prompt text).
std::uint64_t ChatFingerprint(std::int64_t seed, std::string_view prompt);

/// Strict scripted chat: unknown fingerprints throw kMockScript.
class ScriptedChat final : public ChatProvider {
 public:
  explicit ScriptedChat(std::string identity) : identity_(std::move(identity)) {}
  void Add(std::int64_t seed, std::string_view prompt, std::string reply);
  std::string Complete(const ChatRequest& request) override;
  std::string identity() const override { return identity_; }

 private:
  std::string identity_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::string> script_;
};

/// Chat backed by a function of the request.
class CallbackChat final : public ChatProvider {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  CallbackChat(std::string identity, Fn fn, std::size_t in_flight = 1)
      : identity_(std::move(identity)), fn_(std::move(fn)), in_flight_(in_flight) {}
  std::string Complete(const ChatRequest& request) override {
    CountCall();
    return fn_(request);
  }
  std::string identity() const override { return identity_; }
  std::size_t max_in_flight() const override { return in_flight_; }

 private:
  std::string identity_;
  Fn fn_;
  std::size_t in_flight_;
};

struct SyntheticDomainOptions {
  std::size_t vocabulary_size = 50;  // in-domain concepts reachable by discovery
  std::size_t decoys = 4;            // off-domain concepts the validator rejects
  std::size_t per_round = 12;        // concepts per generation reply
};

/// Deterministic offline stand-in for an LLM: a closed synthetic concept
/// world with generation, expansion, validation, captioning and general-bank
/// replies keyed by the request task and seed.
class SyntheticDomainChat final : public ChatProvider {
 public:
  SyntheticDomainChat(std::string identity, SyntheticDomainOptions options = {});
  std::string Complete(const ChatRequest& request) override;
  std::string identity() const override { return identity_; }
  std::size_t max_in_flight() const override { return 4; }

  /// In-domain concept names, index order.
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<std::string>& decoys() const { return decoys_; }

 private:
  std::string identity_;
  SyntheticDomainOptions options_;
  std::vector<std::string> vocabulary_;
  std::vector<std::string> decoys_;
  std::map<std::string, std::size_t> vocab_index_;  // canonical key -> index
  std::map<std::string, std::size_t> decoy_index_;
};

/// Deterministic pseudo-random unit-ish vector for `text`, seeded by
/// hash(text). Shared by the mock embedder and the synthetic corpus builder.
std::vector<float> HashVector(std::string_view text, std::size_t dim);

/// Embeds case- and whitespace-folded text with HashVector.
class HashEmbedder final : public EmbeddingProvider {
 public:
  HashEmbedder(std::string model_tag, std::size_t dim) : tag_(std::move(model_tag)), dim_(dim) {}
  /// Items for which `predicate` returns true come back as per-item errors.
  void FailWhen(std::function<bool(std::string_view)> predicate) { fail_ = std::move(predicate); }
  std::vector<EmbedItemResult> EmbedChunk(std::span<const std::string> items) override;
  std::string model_tag() const override { return tag_; }
  std::size_t dim() const { return dim_; }

 private:
  std::string tag_;
  std::size_t dim_;
  std::function<bool(std::string_view)> fail_;
};

class MockImageGen final : public ImageGenProvider {
 public:
  /// Images for which `predicate(prompt, index)` is true fail; default none.
  void FailWhen(std::function<bool(std::string_view, std::size_t)> predicate) {
    fail_ = std::move(predicate);
  }
  GenerationResult Generate(const std::string& prompt, std::size_t n, std::int64_t seed) override;
  std::size_t max_in_flight() const override { return 4; }

 private:
  std::function<bool(std::string_view, std::size_t)> fail_;
};

/// Deterministic probability rows. Roughly one image in ten carries text;
/// blurring it raises its out-of-domain mass.
class MockOod final : public OodProvider {
 public:
  std::vector<OODProbRow> Query(std::span<const std::string> image_uris,
                                std::span<const std::string> concepts, bool blur_text) override;
  static bool HasText(std::string_view uri);
};

}  // namespace pas::gateway

#endif  // PAS_MODEL_GATEWAY_HPP_
