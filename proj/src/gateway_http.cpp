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

#include "httplib.h"

#include <cmath>
#include <random>
#include <thread>

#include "json.hpp"
#include "pas/error.hpp"
#include "pas/log.hpp"
#include "pas/model_gateway.hpp"

namespace pas::gateway {

namespace {

using Json = nlohmann::json;

std::atomic<std::size_t> connection_attempts{0};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // optional path prefix without trailing slash
};

SplitUrl Split(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto slash = base_url.find('/', host_start);
  SplitUrl out;
  if (slash == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, slash);
    out.prefix = base_url.substr(slash);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

double Jitter() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  return std::uniform_real_distribution<double>(0.5, 1.0)(rng);
}

void DefaultSleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

std::string Excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

Headers AuthHeaders(const ProviderEndpoint& endpoint) {
  Headers headers;
  if (endpoint.auth_token && !endpoint.auth_token->empty()) {
    headers.emplace_back("Authorization", "Bearer " + *endpoint.auth_token);
  }
  return headers;
}

Json ParseBody(const HttpResponse& response, const std::string& what) {
  try {
    return Json::parse(response.body);
  } catch (const Json::exception& e) {
    throw ProtocolError(response.status, what + ": invalid JSON: " + Excerpt(response.body));
  }
}

class GateGuard {
 public:
  explicit GateGuard(AdmissionGate& gate) : gate_(gate) { gate_.acquire(); }
  ~GateGuard() { gate_.release(); }
  GateGuard(const GateGuard&) = delete;
  GateGuard& operator=(const GateGuard&) = delete;

 private:
  AdmissionGate& gate_;
};

}  // namespace

HttpResponse HttplibTransport::Post(const std::string& base_url, const std::string& path,
                                    const std::string& body, const Headers& headers,
                                    std::chrono::milliseconds timeout) {
  connection_attempts.fetch_add(1);
  auto url = Split(base_url);
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto result = client.Post(url.prefix + path, h, body, "application/json");
  if (!result) {
    throw Error(ErrorKind::kTransport,
                "POST " + base_url + path + " failed: " + httplib::to_string(result.error()));
  }
  return {result->status, result->body};
}

std::size_t HttplibTransport::ConnectionAttempts() { return connection_attempts.load(); }

std::chrono::milliseconds BackoffDelay(const ProviderEndpoint& endpoint, int retry,
                                       double jitter) {
  const double base = static_cast<double>(endpoint.backoff_base.count());
  const double cap = static_cast<double>(endpoint.backoff_cap.count());
  const double raw = std::min(cap, base * std::ldexp(1.0, std::min(retry, 30)));
  return std::chrono::milliseconds(static_cast<std::int64_t>(raw * jitter));
}

HttpResponse PostWithRetry(Transport& transport, const ProviderEndpoint& endpoint,
                           const std::string& path, const std::string& body,
                           const Sleeper& sleeper) {
  const auto headers = AuthHeaders(endpoint);
  const int attempts = endpoint.max_retries + 1;
  std::string last_failure;
  std::optional<HttpResponse> last_status;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      auto delay = BackoffDelay(endpoint, attempt - 1, Jitter());
      if (delay.count() > 0) (sleeper ? sleeper : DefaultSleep)(delay);
    }
    try {
      auto response = transport.Post(endpoint.base_url, path, body, headers, endpoint.timeout);
      if (response.status >= 200 && response.status < 300) return response;
      if (response.status == 429 || response.status >= 500) {
        Log()->info("{}{}: status {} (attempt {}/{})", endpoint.base_url, path, response.status,
                    attempt + 1, attempts);
        last_status = std::move(response);
        last_failure.clear();
        continue;
      }
      throw ProtocolError(response.status, "POST " + endpoint.base_url + path + " -> " +
                                               std::to_string(response.status) + ": " +
                                               Excerpt(response.body));
    } catch (const ProtocolError&) {
      throw;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kTransport) throw;
      Log()->info("{} (attempt {}/{})", e.what(), attempt + 1, attempts);
      last_failure = e.what();
      last_status.reset();
    }
  }
  if (last_status) {
    throw ProtocolError(last_status->status,
                        "POST " + endpoint.base_url + path + " -> " +
                            std::to_string(last_status->status) + " after " +
                            std::to_string(attempts) + " attempts: " + Excerpt(last_status->body));
  }
  throw Error(ErrorKind::kTransport,
              "giving up after " + std::to_string(attempts) + " attempts: " + last_failure);
}

// ---------------------------------------------------------------------------

HttpChatProvider::HttpChatProvider(ProviderEndpoint endpoint, std::shared_ptr<Transport> transport,
                                   Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      gate_(endpoint_.max_in_flight) {}

std::string HttpChatProvider::Complete(const ChatRequest& request) {
  CountCall();
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", ToString(m.role)}, {"content", m.text}});
  }
  Json payload = {{"model", endpoint_.model_name},
                  {"messages", messages},
                  {"temperature", request.temperature},
                  {"seed", request.seed}};
  GateGuard guard(gate_);
  auto response =
      PostWithRetry(*transport_, endpoint_, "/v1/chat/completions", payload.dump(), sleeper_);
  auto body = ParseBody(response, "chat completion");
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception&) {
    throw ProtocolError(response.status, "chat completion without choices[0].message.content: " +
                                             Excerpt(response.body));
  }
}

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderEndpoint endpoint,
                                             std::shared_ptr<Transport> transport, Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      gate_(endpoint_.max_in_flight) {}

std::vector<EmbedItemResult> HttpEmbeddingProvider::EmbedChunk(std::span<const std::string> items) {
  CountCall();
  Json payload = {{"model", endpoint_.model_name},
                  {"input", std::vector<std::string>(items.begin(), items.end())}};
  GateGuard guard(gate_);
  auto response = PostWithRetry(*transport_, endpoint_, "/v1/embeddings", payload.dump(), sleeper_);
  auto body = ParseBody(response, "embeddings");
  std::vector<EmbedItemResult> out(items.size());
  std::vector<bool> filled(items.size(), false);
  try {
    const auto& data = body.at("data");
    for (std::size_t pos = 0; pos < data.size(); ++pos) {
      const auto& entry = data[pos];
      std::size_t index = entry.value("index", pos);
      if (index >= items.size() || filled[index]) {
        throw ProtocolError(response.status, "embedding entry with bad index " +
                                                 std::to_string(index));
      }
      filled[index] = true;
      if (entry.contains("error") && !entry["error"].is_null()) {
        out[index].error = entry["error"].is_string() ? entry["error"].get<std::string>()
                                                      : entry["error"].dump();
      } else {
        out[index].vector = entry.at("embedding").get<std::vector<float>>();
      }
    }
  } catch (const Json::exception& e) {
    throw ProtocolError(response.status, std::string("malformed embeddings reply: ") + e.what());
  }
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (!filled[i]) out[i].error = "no embedding returned";
  }
  return out;
}

HttpImageGenProvider::HttpImageGenProvider(ProviderEndpoint endpoint,
                                           std::shared_ptr<Transport> transport, Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      gate_(endpoint_.max_in_flight) {}

GenerationResult HttpImageGenProvider::Generate(const std::string& prompt, std::size_t n,
                                                std::int64_t seed) {
  CountCall();
  Json payload = {{"prompt", prompt}, {"n", n}, {"seed", seed}};
  if (!endpoint_.model_name.empty()) payload["model"] = endpoint_.model_name;
  GateGuard guard(gate_);
  auto response = PostWithRetry(*transport_, endpoint_, "/generate", payload.dump(), sleeper_);
  auto body = ParseBody(response, "generate");
  GenerationResult out;
  try {
    out.uris = body.at("uris").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw ProtocolError(response.status, std::string("malformed generate reply: ") + e.what());
  }
  return out;
}

HttpOodProvider::HttpOodProvider(ProviderEndpoint endpoint, std::shared_ptr<Transport> transport,
                                 Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      gate_(endpoint_.max_in_flight) {}

std::vector<OODProbRow> HttpOodProvider::Query(std::span<const std::string> image_uris,
                                               std::span<const std::string> concepts,
                                               bool blur_text) {
  CountCall();
  Json payload = {{"image_uris", std::vector<std::string>(image_uris.begin(), image_uris.end())},
                  {"concepts", std::vector<std::string>(concepts.begin(), concepts.end())},
                  {"blur_text", blur_text}};
  GateGuard guard(gate_);
  auto response = PostWithRetry(*transport_, endpoint_, "/ood_probs", payload.dump(), sleeper_);
  auto body = ParseBody(response, "ood_probs");
  std::vector<OODProbRow> out;
  try {
    const Json& rows = body.is_array() ? body : body.at("rows");
    for (const auto& r : rows) {
      OODProbRow row;
      row.image_id = r.at("image_id").get<std::string>();
      row.p = r.at("p").get<std::vector<double>>();
      row.p_no = r.at("p_no").get<std::vector<double>>();
      row.text_detected = r.value("text_detected", true);
      out.push_back(std::move(row));
    }
  } catch (const Json::exception& e) {
    throw ProtocolError(response.status, std::string("malformed ood_probs reply: ") + e.what());
  }
  return out;
}

}  // namespace pas::gateway
