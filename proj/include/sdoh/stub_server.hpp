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

// Local OpenAI-compatible chat-completions endpoint for tests and offline
// demos, with scripted faults.

#ifndef SDOH_STUB_SERVER_HPP_
#define SDOH_STUB_SERVER_HPP_

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sdoh/classify.hpp"
#include "sdoh/remote.hpp"

namespace sdoh::stub {

/// Maps the request messages to the assistant content.
using Responder = std::function<std::string(const std::vector<ChatMessage>&)>;

Responder fixed_responder(std::string content);
/// Answers classification prompts with {"label": [...]} from lexicon rules
/// applied to the text sample, for the given task.
Responder lexicon_responder(LexiconRules rules, Task task);
/// Answers generation prompts with a numbered list of the requested size.
Responder list_responder();
/// Answers injection prompts with one "[Race gender] ..." line per original,
/// cycling through race/ethnicity and gender.
Responder injection_responder();
/// Dispatches on prompt shape: injection, generation, else classification.
Responder demo_responder(LexiconRules rules, Task task);

struct Faults {
  int fail_first = 0;       // leading requests answered with `fail_status`
  int fail_status = 429;
  int delay_ms_min = 0;     // uniform per-request delay
  int delay_ms_max = 0;
  bool hang = false;        // never answer within any sane timeout
  std::uint64_t seed = 1;
};

class StubServer {
 public:
  StubServer(Responder responder, Faults faults = {});
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds 127.0.0.1 on `port` (0 picks a free one) and serves on a
  /// background thread. Returns the bound port.
  int start(int port = 0);
  void stop();

  int port() const { return port_; }
  /// e.g. http://127.0.0.1:40123/v1
  std::string base_url() const;

  int requests() const { return requests_.load(); }
  int peak_concurrency() const { return peak_.load(); }
  /// Raw request bodies in arrival order.
  std::vector<std::string> bodies() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Responder responder_;
  Faults faults_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
  std::atomic<bool> stopping_{false};
  mutable std::mutex mu_;
  std::vector<std::string> bodies_;
};

}  // namespace sdoh::stub

#endif  // SDOH_STUB_SERVER_HPP_
