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

// Chat-completions client: POST {base_url}/chat/completions with
// {model, temperature, messages}, first choice's message content back.
// Requests are retried with exponential backoff on transport errors, 429
// and 5xx. A response cache keyed by request digest makes runs replayable
// without an endpoint.

#ifndef SDOH_REMOTE_HPP_
#define SDOH_REMOTE_HPP_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdoh/classify.hpp"

namespace sdoh {

struct RemoteBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  int max_retries = 3;
  int max_concurrency = 4;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds initial_backoff{500};
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<std::filesystem::path> cache_path;
  /// Serve only from the cache; a miss is a transport failure.
  bool offline = false;

  /// Throws ValidationError when max_concurrency < 1, temperature < 0 or
  /// max_retries < 0.
  void validate() const;
};

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

nlohmann::json to_json(const std::vector<ChatMessage>& messages);

struct ChatResult {
  std::optional<std::string> content;  // nullopt on failure
  std::string error;
  int retries = 0;
  bool from_cache = false;
};

/// Thread-safe JSONL-backed map from request digest to response text.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> path);

  std::optional<std::string> get(const std::string& key) const;
  /// Appends to the backing file when one is configured.
  void put(const std::string& key, const std::string& response);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> entries_;
};

/// SHA-256 over model, temperature, messages and a caller-chosen salt.
std::string request_digest(const RemoteBackendConfig& config, const std::vector<ChatMessage>& messages,
                           std::string_view salt = {});

class ChatClient {
 public:
  explicit ChatClient(RemoteBackendConfig config);

  /// Blocking; safe to call from several threads. `salt` distinguishes
  /// intentional repeats of the same request in the cache.
  ChatResult complete(const std::vector<ChatMessage>& messages, std::string_view salt = {});

  const RemoteBackendConfig& config() const { return config_; }
  /// Peak number of requests in flight at once, for tests and logs.
  int peak_in_flight() const { return peak_in_flight_.load(); }

 private:
  ChatResult post_with_retries(const std::vector<ChatMessage>& messages);

  RemoteBackendConfig config_;
  std::string api_key_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_in_flight_{0};
};

/// Runs fn(i) for i in [0, n) on at most `workers` threads.
void run_bounded(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct RemoteClassifyOptions {
  Task task = Task::kAny;
  std::vector<Category> labels{kAllCategories.begin(), kAllCategories.end()};
  std::vector<Exemplar> exemplars;  // empty: zero-shot
  PromptOptions prompt;
  AliasTable aliases = AliasTable::defaults();
};

/// One record per sentence in input order. Exhausted retries yield a record
/// with parse_status failed and the transport error noted.
std::vector<PredictionRecord> classify_remote(ChatClient& client, const std::vector<SentenceInput>& sentences,
                                              const RemoteClassifyOptions& options);

}  // namespace sdoh

#endif  // SDOH_REMOTE_HPP_
