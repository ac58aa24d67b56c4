// Copyright 2026 The NeedForge Authors.
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


// Transport to an OpenAI-compatible chat endpoint and to the token
// embedding sidecar, with a write-once response cache, retries with
// exponential backoff, and a bound on in-flight requests.

#ifndef NEEDFORGE_LLM_GATEWAY_H_
#define NEEDFORGE_LLM_GATEWAY_H_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace needforge {

inline constexpr char kApiKeyEnv[] = "NEEDFORGE_API_KEY";

struct LlmRequest {
  std::string model;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 2048;
  // "low", "medium" or "high"; passed through to the endpoint untouched.
  std::optional<std::string> reasoning_effort;

  void Validate() const;
  // Hex SHA-256 over every field; identical requests share a key.
  std::string CacheKey() const;
  // OpenAI chat completions body.
  std::string ToRequestBody() const;
};

std::string Sha256Hex(std::string_view data);

struct HttpResponse {
  // 0 when no response was received (connection refused, timeout, ...).
  int status = 0;
  std::string body;
  std::string error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  // Must be safe to call from several threads at once.
  virtual HttpResponse PostJson(const std::string& url, const std::string& body,
                                const HttpHeaders& headers) = 0;
};

// cpp-httplib backed transport; one connection per call.
std::shared_ptr<HttpTransport> MakeHttpTransport(std::chrono::seconds timeout);

// Content-addressed store of successful responses. Entries are never
// overwritten. With no directory the cache lives only in memory.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> dir);

  std::optional<std::string> Get(const std::string& key);
  // No-op when `key` is already stored.
  void Put(const std::string& key, const std::string& value);

 private:
  std::filesystem::path PathFor(const std::string& key) const;

  std::optional<std::filesystem::path> dir_;
  std::mutex mu_;
  std::unordered_map<std::string, std::string> memory_;
};

struct GatewayConfig {
  std::string base_url;
  std::string sidecar_url;
  std::string api_key;
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
  int max_in_flight = 8;
  std::optional<std::filesystem::path> cache_dir;
  std::chrono::seconds timeout{300};
};

struct TokenEmbeddings {
  std::vector<std::string> tokens;
  // Row-aligned with `tokens`, unit length.
  std::vector<std::vector<double>> vectors;
  std::string model_id;
};

class LlmGateway {
 public:
  // A null transport selects the cpp-httplib one.
  explicit LlmGateway(GatewayConfig config,
                      std::shared_ptr<HttpTransport> transport = nullptr);

  LlmGateway(const LlmGateway&) = delete;
  LlmGateway& operator=(const LlmGateway&) = delete;

  // Assistant message text. Throws TransportError once retries are
  // exhausted (or on a non-retryable status) and ProtocolError when the
  // endpoint reply is not a chat completion.
  std::string Complete(const LlmRequest& request);

  struct Outcome {
    std::optional<std::string> text;
    std::string error;
  };
  // Runs Complete over all requests with at most max_in_flight concurrent
  // calls. Outcomes are in input order; failures are captured, not thrown.
  std::vector<Outcome> CompleteBatch(std::span<const LlmRequest> requests);

  // Token vectors from the sidecar. Empty text yields an empty result
  // without a network call.
  TokenEmbeddings EmbedTokens(const std::string& text);

  bool has_sidecar() const { return !config_.sidecar_url.empty(); }

  struct Stats {
    std::size_t network_calls = 0;
    std::size_t cache_hits = 0;
  };
  Stats stats() const { return {network_calls_.load(), cache_hits_.load()}; }

 private:
  // Posts with retries; returns the 200 body.
  std::string PostWithRetry(const std::string& url, const std::string& body);
  std::shared_ptr<std::mutex> KeyLock(const std::string& key);

  GatewayConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  ResponseCache cache_;
  std::counting_semaphore<> in_flight_;
  std::mutex key_locks_mu_;
  std::unordered_map<std::string, std::weak_ptr<std::mutex>> key_locks_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace needforge

#endif  // NEEDFORGE_LLM_GATEWAY_H_
