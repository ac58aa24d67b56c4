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


#include "needforge/llm_gateway.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"
#include "needforge/error.h"

namespace needforge {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// "http://host:8080/prefix" -> {"http://host:8080", "/prefix"}.
std::pair<std::string, std::string> SplitUrl(const std::string& url) {
  const std::size_t scheme = url.find("://");
  const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const std::size_t slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string JoinUrl(const std::string& base, std::string_view path) {
  std::string out = base;
  while (!out.empty() && out.back() == '/') out.pop_back();
  out += path;
  return out;
}

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse PostJson(const std::string& url, const std::string& body,
                        const HttpHeaders& headers) override {
    auto [origin, path] = SplitUrl(url);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path.empty() ? "/" : path, h, body,
                           "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
  }

 private:
  std::chrono::seconds timeout_;
};

bool Retryable(int status) {
  return status == 0 || status == 429 || status >= 500;
}

std::string ExtractChatContent(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw ProtocolError("endpoint reply is not JSON: " + body.substr(0, 200));
  }
  const json* content = nullptr;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() &&
      !j["choices"].empty()) {
    const json& choice = j["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr || !content->is_string()) {
    throw ProtocolError("reply has no choices[0].message.content string");
  }
  return content->get<std::string>();
}

TokenEmbeddings ParseEmbedResponse(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw ProtocolError("sidecar reply is not JSON");
  }
  TokenEmbeddings out;
  try {
    out.tokens = j.at("tokens").get<std::vector<std::string>>();
    out.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
    out.model_id = j.value("model_id", "");
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed sidecar reply: ") + e.what());
  }
  if (out.tokens.size() != out.vectors.size()) {
    throw ProtocolError(fmt::format("sidecar returned {} tokens but {} vectors",
                                    out.tokens.size(), out.vectors.size()));
  }
  if (out.vectors.empty()) return out;
  const std::size_t dim = out.vectors.front().size();
  if (dim == 0) throw ProtocolError("sidecar returned zero-length vectors");
  for (const auto& v : out.vectors) {
    if (v.size() != dim) {
      throw ProtocolError(fmt::format(
          "sidecar vector dimension {} differs from {}", v.size(), dim));
    }
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-3) {
      throw ProtocolError("sidecar vector is not unit length");
    }
  }
  return out;
}

}  // namespace

void LlmRequest::Validate() const {
  if (model.empty()) throw InvalidArgument("request without model");
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  if (max_tokens <= 0) throw InvalidArgument("max_tokens must be > 0");
}

std::string LlmRequest::CacheKey() const {
  ordered_json j = {{"kind", "chat"},
                    {"model", model},
                    {"system_prompt", system_prompt},
                    {"user_prompt", user_prompt},
                    {"temperature", temperature},
                    {"max_tokens", max_tokens},
                    {"reasoning_effort",
                     reasoning_effort ? json(*reasoning_effort) : json(nullptr)}};
  return Sha256Hex(j.dump(-1, ' ', false, json::error_handler_t::replace));
}

std::string LlmRequest::ToRequestBody() const {
  ordered_json messages = ordered_json::array();
  if (!system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", user_prompt}});
  ordered_json body = {{"model", model},
                       {"messages", std::move(messages)},
                       {"temperature", temperature},
                       {"max_tokens", max_tokens}};
  if (reasoning_effort) body["reasoning_effort"] = *reasoning_effort;
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::shared_ptr<HttpTransport> MakeHttpTransport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

ResponseCache::ResponseCache(std::optional<std::filesystem::path> dir)
    : dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::filesystem::path ResponseCache::PathFor(const std::string& key) const {
  return *dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::Get(const std::string& key) {
  {
    std::lock_guard lock(mu_);
    auto it = memory_.find(key);
    if (it != memory_.end()) return it->second;
  }
  if (!dir_) return std::nullopt;
  std::ifstream in(PathFor(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  std::string value;
  try {
    value = json::parse(buf.str()).at("response").get<std::string>();
  } catch (const json::exception&) {
    spdlog::warn("ignoring unreadable cache entry {}", PathFor(key).string());
    return std::nullopt;
  }
  std::lock_guard lock(mu_);
  memory_.emplace(key, value);
  return value;
}

void ResponseCache::Put(const std::string& key, const std::string& value) {
  // An entry already on disk wins over the new value.
  if (Get(key)) return;
  {
    std::lock_guard lock(mu_);
    if (!memory_.emplace(key, value).second) return;
  }
  if (!dir_) return;
  const auto path = PathFor(key);
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp" +
                   std::to_string(std::hash<std::thread::id>()(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    ordered_json entry = {{"key", key}, {"response", value}};
    out << entry.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    if (!out) throw Error("cannot write cache entry " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

LlmGateway::LlmGateway(GatewayConfig config,
                       std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport)
                           : MakeHttpTransport(config_.timeout)),
      cache_(config_.cache_dir),
      in_flight_(std::max(1, config_.max_in_flight)) {}

std::shared_ptr<std::mutex> LlmGateway::KeyLock(const std::string& key) {
  std::lock_guard lock(key_locks_mu_);
  auto& slot = key_locks_[key];
  auto existing = slot.lock();
  if (existing) return existing;
  auto fresh = std::make_shared<std::mutex>();
  slot = fresh;
  // Drop expired entries now and then so the map does not grow unbounded.
  if (key_locks_.size() > 4096) {
    std::erase_if(key_locks_, [](const auto& kv) { return kv.second.expired(); });
  }
  return fresh;
}

std::string LlmGateway::PostWithRetry(const std::string& url,
                                      const std::string& body) {
  HttpHeaders headers;
  if (!config_.api_key.empty()) {
    headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  }
  std::chrono::milliseconds backoff = config_.initial_backoff;
  HttpResponse last;
  for (int attempt = 0;; ++attempt) {
    {
      in_flight_.acquire();
      ++network_calls_;
      try {
        last = transport_->PostJson(url, body, headers);
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
    }
    if (last.status == 200) return last.body;
    const std::string what =
        last.status == 0 ? fmt::format("{}: {}", url, last.error)
                         : fmt::format("{}: HTTP {}", url, last.status);
    if (!Retryable(last.status)) throw TransportError(what, last.status);
    if (attempt >= config_.max_retries) {
      throw TransportError(
          fmt::format("{} (gave up after {} attempts)", what, attempt + 1),
          last.status);
    }
    spdlog::debug("{}; retrying in {} ms", what, backoff.count());
    std::this_thread::sleep_for(backoff);
    backoff = std::min(backoff * 2, config_.max_backoff);
  }
}

std::string LlmGateway::Complete(const LlmRequest& request) {
  request.Validate();
  if (config_.base_url.empty()) throw ConfigError("no LLM endpoint configured");
  const std::string key = request.CacheKey();
  auto key_lock = KeyLock(key);
  std::lock_guard lock(*key_lock);
  if (auto hit = cache_.Get(key)) {
    ++cache_hits_;
    return *hit;
  }
  const std::string body = PostWithRetry(
      JoinUrl(config_.base_url, "/v1/chat/completions"), request.ToRequestBody());
  std::string content = ExtractChatContent(body);
  cache_.Put(key, content);
  return content;
}

std::vector<LlmGateway::Outcome> LlmGateway::CompleteBatch(
    std::span<const LlmRequest> requests) {
  std::vector<Outcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        outcomes[i].text = Complete(requests[i]);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(
      requests.size(), static_cast<std::size_t>(std::max(1, config_.max_in_flight)));
  {
    std::vector<std::jthread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  return outcomes;
}

TokenEmbeddings LlmGateway::EmbedTokens(const std::string& text) {
  if (text.empty()) return {};
  if (config_.sidecar_url.empty()) {
    throw ConfigError("no embedding sidecar configured");
  }
  ordered_json request = {{"text", text}};
  const std::string body =
      request.dump(-1, ' ', false, json::error_handler_t::replace);
  const std::string key = Sha256Hex("embed\n" + config_.sidecar_url + "\n" + body);
  auto key_lock = KeyLock(key);
  std::lock_guard lock(*key_lock);
  if (auto hit = cache_.Get(key)) {
    ++cache_hits_;
    return ParseEmbedResponse(*hit);
  }
  const std::string reply =
      PostWithRetry(JoinUrl(config_.sidecar_url, "/embed-tokens"), body);
  TokenEmbeddings out = ParseEmbedResponse(reply);
  cache_.Put(key, reply);
  return out;
}

}  // namespace needforge
