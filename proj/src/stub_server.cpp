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

#include "sdoh/stub_server.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <regex>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sdoh/error.hpp"
#include "sdoh/rng.hpp"
#include "sdoh/synthgen.hpp"
#include "sdoh/text.hpp"

namespace sdoh::stub {

namespace {

using json = nlohmann::json;

constexpr std::string_view kSampleOpen = "Text sample: ```";
constexpr std::string_view kSampleClose = "```\n\nYour JSON response:";

const std::string& last_user(const std::vector<ChatMessage>& messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it)
    if (it->role == "user") return it->content;
  static const std::string empty;
  return empty;
}

std::string topic_phrase(std::string topic) {
  for (std::string_view p : {"patient's ", "patients being ", "patients "}) {
    if (topic.rfind(p, 0) == 0) {
      topic.erase(0, p.size());
      break;
    }
  }
  return topic;
}

bool is_injection(const std::string& content) { return content.find("swap the sentences patients above") != std::string::npos; }

}  // namespace

Responder fixed_responder(std::string content) {
  return [content = std::move(content)](const std::vector<ChatMessage>&) { return content; };
}

Responder lexicon_responder(LexiconRules rules, Task task) {
  return [rules = std::move(rules), task](const std::vector<ChatMessage>& messages) {
    const std::string& prompt = last_user(messages);
    std::string_view sample;
    const auto open = prompt.rfind(kSampleOpen);
    const auto close = prompt.rfind(kSampleClose);
    if (open != std::string::npos && close != std::string::npos && close >= open + kSampleOpen.size()) {
      sample = std::string_view(prompt).substr(open + kSampleOpen.size(), close - open - kSampleOpen.size());
    }
    json labels = json::array();
    for (Category c : classify_lexicon(rules, sample).for_task(task).members()) labels.push_back(std::string(to_string(c)));
    if (labels.empty()) labels.push_back(std::string(kNoSdohToken));
    return json{{"label", labels}}.dump();
  };
}

Responder list_responder() {
  return [](const std::vector<ChatMessage>& messages) {
    static const std::regex ask(R"(give me (\d+) sentences from your clinic notes about various (.+) similar)");
    static constexpr std::array<const char*, 5> kOpen = {"Patient reports", "Pt describes", "Spouse mentions",
                                                         "Patient notes", "Discussed with patient"};
    static constexpr std::array<const char*, 4> kMiddle = {"ongoing", "recent", "long-standing", "new"};
    static constexpr std::array<const char*, 5> kClose = {"", " since last visit", " this month",
                                                          " per social work", " during treatment"};
    const std::string& prompt = last_user(messages);
    std::smatch m;
    if (!std::regex_search(prompt, m, ask)) return std::string("I can only write numbered sentences.");
    const int n = std::stoi(m[1].str());
    const std::string topic = topic_phrase(m[2].str());
    std::string out;
    for (int k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      out += fmt::format("{}. {} {} {}{}{}.\n", k + 1, kOpen[i % kOpen.size()], kMiddle[(i / kOpen.size()) % kMiddle.size()],
                         topic, kClose[(i / (kOpen.size() * kMiddle.size())) % kClose.size()],
                         i >= kOpen.size() * kMiddle.size() * kClose.size() ? fmt::format(" ({})", k + 1) : "");
    }
    return out;
  };
}

Responder injection_responder() {
  return [](const std::vector<ChatMessage>& messages) {
    static constexpr std::array<RaceEthnicity, 4> kRaces = {RaceEthnicity::kAsian, RaceEthnicity::kBlack,
                                                            RaceEthnicity::kWhite, RaceEthnicity::kHispanic};
    const std::string& prompt = last_user(messages);
    const auto cut = prompt.find("\n swap the sentences");
    const auto originals = text::split(std::string_view(prompt).substr(0, cut), '\n');
    std::string out;
    for (std::size_t i = 0; i < originals.size(); ++i) {
      Descriptor d{kRaces[i % kRaces.size()], (i / kRaces.size()) % 2 == 0 ? Gender::kFemale : Gender::kMale};
      const std::string person =
          fmt::format("{} {}", to_string(d.race_ethnicity), d.gender == Gender::kFemale ? "woman" : "man");
      std::string body(text::trim(originals[i]));
      if (body.rfind("Patient ", 0) == 0 || body.rfind("patient ", 0) == 0) {
        body = fmt::format("{} {}", person, body.substr(8));
      } else {
        body = fmt::format("{}: {}", person, body);
      }
      out += fmt::format("{}. {}\n", i + 1, render_demo_line(d, body));
    }
    return out;
  };
}

Responder demo_responder(LexiconRules rules, Task task) {
  auto classify = lexicon_responder(std::move(rules), task);
  auto generate = list_responder();
  auto inject = injection_responder();
  return [=](const std::vector<ChatMessage>& messages) {
    const std::string& prompt = last_user(messages);
    if (is_injection(prompt)) return inject(messages);
    if (prompt.find("sentences from your clinic notes") != std::string::npos) return generate(messages);
    return classify(messages);
  };
}

struct StubServer::Impl {
  httplib::Server server;
};

StubServer::StubServer(Responder responder, Faults faults)
    : impl_(std::make_unique<Impl>()), responder_(std::move(responder)), faults_(faults) {
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    const int n = ++requests_;
    const int active = ++active_;
    int peak = peak_.load();
    while (active > peak && !peak_.compare_exchange_weak(peak, active)) {
    }
    {
      std::lock_guard lock(mu_);
      bodies_.push_back(req.body);
    }
    int delay_ms = faults_.delay_ms_min;
    if (faults_.delay_ms_max > faults_.delay_ms_min) {
      Rng rng(faults_.seed + static_cast<std::uint64_t>(n));
      delay_ms += static_cast<int>(rng.below(static_cast<std::uint64_t>(faults_.delay_ms_max - faults_.delay_ms_min + 1)));
    }
    if (faults_.hang) delay_ms = 60'000;
    for (int waited = 0; waited < delay_ms && !stopping_; waited += 5) {
      std::this_thread::sleep_for(std::chrono::milliseconds(std::min(5, delay_ms - waited)));
    }
    if (n <= faults_.fail_first) {
      res.status = faults_.fail_status;
      res.set_content(R"({"error":{"message":"scripted failure"}})", "application/json");
      --active_;
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array()) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"malformed request"}})", "application/json");
      --active_;
      return;
    }
    std::vector<ChatMessage> messages;
    for (const auto& m : body["messages"]) messages.push_back({m.value("role", ""), m.value("content", "")});
    json reply = {{"id", fmt::format("stub-{}", n)},
                  {"object", "chat.completion"},
                  {"model", body.value("model", "stub")},
                  {"choices", json::array({{{"index", 0},
                                            {"message", {{"role", "assistant"}, {"content", responder_(messages)}}},
                                            {"finish_reason", "stop"}}})}};
    res.set_content(reply.dump(), "application/json");
    --active_;
  });
}

StubServer::~StubServer() { stop(); }

int StubServer::start(int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw IoError(fmt::format("stub server cannot bind port {}", port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void StubServer::stop() {
  stopping_ = true;
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string StubServer::base_url() const { return fmt::format("http://127.0.0.1:{}/v1", port_); }

std::vector<std::string> StubServer::bodies() const {
  std::lock_guard lock(mu_);
  return bodies_;
}

}  // namespace sdoh::stub
