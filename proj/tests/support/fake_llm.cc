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


#include "support/fake_llm.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "httplib.h"

namespace needforge::testing {
namespace {

using json = nlohmann::json;

std::uint64_t Fnv(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> Words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Text after the first line starting with `marker`, up to the next blank
// line.
std::string Section(const std::string& prompt, const std::string& marker) {
  const auto at = prompt.find(marker);
  if (at == std::string::npos) return "";
  const auto start = prompt.find('\n', at);
  if (start == std::string::npos) return "";
  const auto end = prompt.find("\n\n", start + 1);
  return prompt.substr(start + 1, end == std::string::npos ? std::string::npos
                                                          : end - start - 1);
}

std::string FirstQuery(const std::string& prompt) {
  const auto at = prompt.find("\n- ");
  if (at == std::string::npos) return "";
  const auto end = prompt.find('\n', at + 3);
  return prompt.substr(at + 3, end == std::string::npos ? std::string::npos : end - at - 3);
}

std::string TopicJson(const std::string& subject) {
  json j = {{"title", subject},
            {"description", "Find documents that explain " + subject + "."},
            {"narrative", "Relevant documents discuss " + subject +
                              " directly. Documents that only mention it in passing are "
                              "not relevant."}};
  return "```json\n" + j.dump(2) + "\n```";
}

}  // namespace

std::string ChatBody(const std::string& content) {
  json j = {{"id", "chatcmpl-fake"},
            {"object", "chat.completion"},
            {"choices",
             {{{"index", 0},
               {"message", {{"role", "assistant"}, {"content", content}}},
               {"finish_reason", "stop"}}}}};
  return j.dump();
}

FakeReply ChatReply(const std::string& content) { return {200, ChatBody(content)}; }

FakeReply ToyChatHandler(const json& request) {
  const std::string prompt = request.at("messages").back().at("content").get<std::string>();
  const std::string model = request.value("model", "");
  const std::uint64_t h = Fnv(model + "\n" + prompt);

  if (prompt.find("BEGIN TOPIC FIELDS") != std::string::npos) {
    static const std::set<std::string> kLabels = {"title", "description", "narrative",
                                                  "end", "topic", "fields"};
    std::string subject;
    int taken = 0;
    for (const auto& w : Words(Section(prompt, "BEGIN TOPIC FIELDS"))) {
      if (kLabels.count(w) || taken == 6) continue;
      subject += (taken++ ? " " : "") + w;
    }
    return ChatReply(TopicJson(subject));
  }
  if (prompt.find("TREC-style topic") != std::string::npos) {
    if (h % 9 == 0) return ChatReply("I am not able to write a topic for this.");
    std::string subject = FirstQuery(prompt);
    if (subject.empty()) subject = "the subject of the example documents";
    if (model == "model-b") subject += " in practice";
    return ChatReply("Here is the topic.\n" + TopicJson(subject));
  }
  if (prompt.find("Search topic:") != std::string::npos) {
    if (h % 11 == 0) return ChatReply("The document is hard to assess.");
    const auto topic_words = Words(Section(prompt, "Search topic:"));
    const std::set<std::string> topic(topic_words.begin(), topic_words.end());
    const auto open = prompt.find("<<<");
    const auto close = prompt.find(">>>", open);
    int overlap = 0;
    for (const auto& w : Words(prompt.substr(open, close - open))) {
      if (w.size() > 3 && topic.count(w)) ++overlap;
    }
    int grade = overlap >= 3 ? 2 : overlap >= 1 ? 1 : 0;
    if (model == "model-b" && h % 4 == 0) grade = std::min(grade + 1, 2);
    return ChatReply("The document mentions " + std::to_string(overlap) +
                     " topic terms.\nGrade: " + std::to_string(grade));
  }
  return {400, R"({"error":"unrecognised prompt"})"};
}

json ToyEmbedding(const std::string& text) {
  constexpr int kDim = 8;
  json tokens = json::array();
  json vectors = json::array();
  for (const auto& w : Words(text)) {
    std::vector<double> v(kDim);
    double norm = 0.0;
    std::uint64_t h = Fnv(w);
    for (int d = 0; d < kDim; ++d) {
      h = h * 6364136223846793005ULL + 1442695040888963407ULL;
      v[d] = static_cast<double>(h >> 11) / 9007199254740992.0 - 0.5;
      norm += v[d] * v[d];
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    tokens.push_back(w);
    vectors.push_back(v);
  }
  return {{"tokens", tokens}, {"vectors", vectors}, {"model_id", "toy-encoder"}, {"dim", kDim}};
}

struct FakeLlmServer::Impl {
  httplib::Server server;
  int port = 0;
  std::thread thread;
};

FakeLlmServer::FakeLlmServer(Handler chat)
    : impl_(std::make_unique<Impl>()), chat_(std::move(chat)) {
  auto& server = impl_->server;
  server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                             httplib::Response& res) {
    const int now = ++in_flight_;
    int seen = max_concurrency_.load();
    while (now > seen && !max_concurrency_.compare_exchange_weak(seen, now)) {
    }
    ++chat_calls_;
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_.load()));
    FakeReply reply;
    std::optional<FakeReply> scripted;
    json body = json::parse(req.body, nullptr, false);
    {
      std::lock_guard lock(mu_);
      requests_.push_back(body);
      auth_.push_back(req.get_header_value("Authorization"));
      if (!script_.empty()) {
        scripted = script_.front();
        script_.pop_front();
      }
    }
    if (scripted) {
      reply = *scripted;
    } else if (body.is_discarded()) {
      reply = {400, R"({"error":"bad json"})"};
    } else {
      reply = chat_(body);
    }
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
    --in_flight_;
  });
  server.Post("/embed-tokens", [this](const httplib::Request& req, httplib::Response& res) {
    ++embed_calls_;
    if (!embed_ready_) {
      res.status = 503;
      res.set_content(R"({"error":"loading"})", "application/json");
      return;
    }
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("text")) {
      res.status = 400;
      return;
    }
    res.set_content(ToyEmbedding(body["text"].get<std::string>()).dump(), "application/json");
  });
  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    if (!embed_ready_) {
      res.status = 503;
      res.set_content(R"({"status":"loading"})", "application/json");
      return;
    }
    res.set_content(R"({"status":"ok","model_id":"toy-encoder","dim":8})", "application/json");
  });
  impl_->port = server.bind_to_any_port("127.0.0.1");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

FakeLlmServer::~FakeLlmServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string FakeLlmServer::url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

void FakeLlmServer::Script(std::vector<FakeReply> replies) {
  std::lock_guard lock(mu_);
  script_.insert(script_.end(), replies.begin(), replies.end());
}

std::vector<json> FakeLlmServer::chat_requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::vector<std::string> FakeLlmServer::authorization_headers() const {
  std::lock_guard lock(mu_);
  return auth_;
}

HttpResponse ScriptedTransport::PostJson(const std::string& url, const std::string& body,
                                         const HttpHeaders&) {
  ++calls_;
  std::lock_guard lock(mu_);
  bodies_.push_back(body);
  urls_.push_back(url);
  if (!replies_.empty()) {
    last_ = replies_.front();
    replies_.pop_front();
  }
  return last_;
}

std::vector<std::string> ScriptedTransport::bodies() const {
  std::lock_guard lock(mu_);
  return bodies_;
}

std::vector<std::string> ScriptedTransport::urls() const {
  std::lock_guard lock(mu_);
  return urls_;
}

}  // namespace needforge::testing
