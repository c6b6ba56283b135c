// Copyright 2026 The SDoH Workbench Authors.
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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "sdoh/remote.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "sdoh/io.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

using json = nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError(fmt::format("base_url '{}' lacks a scheme", url));
  auto slash = url.find('/', scheme + 3);
  Endpoint e;
  e.origin = url.substr(0, slash);
  e.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

bool retryable_status(int status) { return status == 429 || status == 408 || status >= 500; }

}  // namespace

void RemoteBackendConfig::validate() const {
  if (max_concurrency < 1) throw ValidationError("max_concurrency must be at least 1");
  if (temperature < 0) throw ValidationError("temperature must be non-negative");
  if (max_retries < 0) throw ValidationError("max_retries must be non-negative");
  if (timeout.count() <= 0) throw ValidationError("timeout must be positive");
  if (!offline) split_url(base_url);
}

json to_json(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
  return arr;
}

ResponseCache::ResponseCache(std::optional<std::filesystem::path> path) : path_(std::move(path)) {
  if (!path_ || !std::filesystem::exists(*path_)) return;
  for (const auto& [line, obj] : io::read_jsonl(*path_)) {
    if (obj.contains("key") && obj.contains("response")) {
      entries_[obj["key"].get<std::string>()] = obj["response"].get<std::string>();
    }
  }
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& response) {
  std::lock_guard lock(mu_);
  if (!entries_.emplace(key, response).second) return;
  if (!path_) return;
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream out(*path_, std::ios::app | std::ios::binary);
  out << json{{"key", key}, {"response", response}}.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string request_digest(const RemoteBackendConfig& config, const std::vector<ChatMessage>& messages,
                           std::string_view salt) {
  json j = {{"model", config.model_name},
            {"temperature", config.temperature},
            {"messages", to_json(messages)},
            {"salt", std::string(salt)}};
  return io::sha256_hex(j.dump());
}

ChatClient::ChatClient(RemoteBackendConfig config)
    : config_(std::move(config)), cache_(std::make_shared<ResponseCache>(config_.cache_path)) {
  config_.validate();
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

ChatResult ChatClient::complete(const std::vector<ChatMessage>& messages, std::string_view salt) {
  const std::string key = request_digest(config_, messages, salt);
  if (auto hit = cache_->get(key)) {
    ChatResult r;
    r.content = *hit;
    r.from_cache = true;
    return r;
  }
  if (config_.offline) {
    ChatResult r;
    r.error = "offline mode: response not in cache";
    return r;
  }
  ChatResult r = post_with_retries(messages);
  if (r.content) cache_->put(key, *r.content);
  return r;
}

ChatResult ChatClient::post_with_retries(const std::vector<ChatMessage>& messages) {
  const Endpoint ep = split_url(config_.base_url);
  const std::string body = json{{"model", config_.model_name},
                                {"temperature", config_.temperature},
                                {"messages", to_json(messages)}}
                               .dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  ChatResult result;
  auto backoff = config_.initial_backoff;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++result.retries;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    int now = ++in_flight_;
    int peak = peak_in_flight_.load();
    while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
    }

    httplib::Client cli(ep.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    auto res = cli.Post(ep.path + "/chat/completions", headers, body, "application/json");
    --in_flight_;

    if (!res) {
      result.error = "transport error: " + httplib::to_string(res.error());
      spdlog::debug("chat request attempt {} failed: {}", attempt + 1, result.error);
      continue;
    }
    if (res->status != 200) {
      result.error = fmt::format("HTTP {}", res->status);
      if (retryable_status(res->status)) {
        spdlog::debug("chat request attempt {} got {}", attempt + 1, res->status);
        continue;
      }
      return result;
    }
    json reply = json::parse(res->body, nullptr, false);
    try {
      result.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      result.error.clear();
      if (result.retries > 0) spdlog::info("chat request succeeded after {} retries", result.retries);
    } catch (const json::exception&) {
      result.error = "malformed chat-completions reply";
    }
    return result;
  }
  spdlog::warn("chat request gave up after {} retries: {}", result.retries, result.error);
  return result;
}

void run_bounded(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::jthread> pool;
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n;
      }
    });
  }
  pool.clear();  // joins
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<PredictionRecord> classify_remote(ChatClient& client, const std::vector<SentenceInput>& sentences,
                                              const RemoteClassifyOptions& options) {
  std::vector<PredictionRecord> out(sentences.size());
  run_bounded(sentences.size(), client.config().max_concurrency, [&](std::size_t i) {
    const auto& s = sentences[i];
    PredictionRecord& r = out[i];
    r.sentence_id = s.id;
    r.task = options.task;
    r.model_id = client.config().model_name;
    r.backend = Backend::kRemote;
    Prompt prompt = options.exemplars.empty()
                        ? build_zero_shot_prompt(options.labels, s.text, options.prompt)
                        : build_few_shot_prompt(options.labels, options.exemplars, s.text, options.prompt);
    ChatResult chat = client.complete({{"user", prompt.text}});
    r.retries = chat.retries;
    if (!chat.content) {
      r.parse_status = ParseStatus::kFailed;
      r.raw_response = "";
      r.error = chat.error;
      return;
    }
    r.raw_response = *chat.content;
    auto parsed = parse_model_response(*chat.content, options.aliases);
    r.labels = parsed.labels;
    r.parse_status = parsed.status;
    if (!parsed.unmapped_tokens.empty()) r.error = "unmapped: " + text::join(parsed.unmapped_tokens, ", ");
  });
  return out;
}

}  // namespace sdoh
