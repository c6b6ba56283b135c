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

#include <doctest.h>

#include <chrono>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "sdoh/error.hpp"
#include "sdoh/io.hpp"
#include "sdoh/remote.hpp"
#include "sdoh/stub_server.hpp"

using namespace sdoh;
using C = Category;

namespace {

RemoteBackendConfig config_for(const stub::StubServer& s) {
  RemoteBackendConfig c;
  c.base_url = s.base_url();
  c.model_name = "stub-model";
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(2000);
  c.api_key_env = "SDOH_TEST_NO_SUCH_KEY";
  return c;
}

std::vector<SentenceInput> sentences(int n) {
  static const char* kTexts[] = {"Pt lives alone.", "He is retired.", "She is homeless.", "BP stable.",
                                 "Needs a ride to clinic.", "Married with two kids."};
  std::vector<SentenceInput> out;
  for (int i = 0; i < n; ++i) out.push_back({fmt::format("s{}", i), kTexts[i % 6]});
  return out;
}

}  // namespace

TEST_SUITE("remote") {
  TEST_CASE("config validation") {
    RemoteBackendConfig c;
    c.max_concurrency = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.temperature = -1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.max_retries = -1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }

  TEST_CASE("request digest covers model, temperature, messages and salt") {
    RemoteBackendConfig c;
    std::vector<ChatMessage> m = {{"user", "hi"}};
    const auto d = request_digest(c, m);
    CHECK(d.size() == 64);
    CHECK(d == request_digest(c, m));
    CHECK(d != request_digest(c, m, "x"));
    CHECK(d != request_digest(c, {{"user", "hi!"}}));
    auto c2 = c;
    c2.temperature = 0.5;
    CHECK(d != request_digest(c2, m));
    auto c3 = c;
    c3.base_url = "http://elsewhere/v1";
    CHECK(d == request_digest(c3, m));
  }

  TEST_CASE("classification round trip against the stub") {
    stub::StubServer server(stub::lexicon_responder(LexiconRules::defaults(), Task::kAny));
    server.start();
    ChatClient client(config_for(server));
    RemoteClassifyOptions opts;
    auto recs = classify_remote(client, sentences(6), opts);
    REQUIRE(recs.size() == 6);
    CHECK(recs[0].labels == CategorySet{C::kSupport});
    CHECK(recs[2].labels == CategorySet{C::kHousing});
    CHECK(recs[3].labels.empty());
    CHECK(recs[3].parse_status == ParseStatus::kOk);
    CHECK(recs[0].backend == Backend::kRemote);
    CHECK(recs[0].model_id == "stub-model");
    auto body = nlohmann::json::parse(server.bodies().at(0));
    CHECK(body["model"] == "stub-model");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["messages"][0]["role"] == "user");
  }

  TEST_CASE("429 responses are retried with backoff until success") {
    stub::Faults f;
    f.fail_first = 2;
    stub::StubServer server(stub::fixed_responder(R"({"label": "HOUSING"})"), f);
    server.start();
    ChatClient client(config_for(server));
    auto r = client.complete({{"user", "x"}});
    REQUIRE(r.content.has_value());
    CHECK(r.retries == 2);
    CHECK(server.requests() == 3);
  }

  TEST_CASE("exhausted retries give a failed record, not an exception") {
    stub::Faults f;
    f.fail_first = 100;
    f.fail_status = 503;
    stub::StubServer server(stub::fixed_responder("{}"), f);
    server.start();
    auto cfg = config_for(server);
    cfg.max_retries = 2;
    ChatClient client(cfg);
    auto recs = classify_remote(client, sentences(1), {});
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].parse_status == ParseStatus::kFailed);
    REQUIRE(recs[0].error.has_value());
    CHECK(recs[0].error->find("503") != std::string::npos);
    CHECK(recs[0].retries == 2);
    CHECK(server.requests() == 3);
  }

  TEST_CASE("client errors are not retried") {
    stub::Faults f;
    f.fail_first = 100;
    f.fail_status = 401;
    stub::StubServer server(stub::fixed_responder("{}"), f);
    server.start();
    ChatClient client(config_for(server));
    auto r = client.complete({{"user", "x"}});
    CHECK_FALSE(r.content.has_value());
    CHECK(server.requests() == 1);
  }

  TEST_CASE("output order matches input order under random latency") {
    stub::Faults f;
    f.delay_ms_min = 0;
    f.delay_ms_max = 25;
    stub::StubServer server(stub::lexicon_responder(LexiconRules::defaults(), Task::kAny), f);
    server.start();
    auto cfg = config_for(server);
    cfg.max_concurrency = 3;
    ChatClient client(cfg);
    auto input = sentences(24);
    auto recs = classify_remote(client, input, {});
    REQUIRE(recs.size() == input.size());
    for (std::size_t i = 0; i < input.size(); ++i) CHECK(recs[i].sentence_id == input[i].id);
    CHECK(server.peak_concurrency() <= 3);
    CHECK(client.peak_in_flight() <= 3);
    CHECK(server.peak_concurrency() >= 2);
  }

  TEST_CASE("a hung endpoint times out") {
    stub::Faults f;
    f.hang = true;
    stub::StubServer server(stub::fixed_responder("{}"), f);
    server.start();
    auto cfg = config_for(server);
    cfg.timeout = std::chrono::milliseconds(200);
    cfg.max_retries = 0;
    ChatClient client(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    auto r = client.complete({{"user", "x"}});
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    CHECK_FALSE(r.content.has_value());
    CHECK(elapsed < std::chrono::seconds(5));
    server.stop();
  }

  TEST_CASE("unreachable endpoint fails cleanly") {
    RemoteBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.max_retries = 1;
    cfg.initial_backoff = std::chrono::milliseconds(1);
    cfg.timeout = std::chrono::milliseconds(300);
    ChatClient client(cfg);
    auto r = client.complete({{"user", "x"}});
    CHECK_FALSE(r.content.has_value());
    CHECK(r.error.find("transport") != std::string::npos);
  }

  TEST_CASE("cache makes runs replayable offline") {
    testing::TempDir dir;
    const auto cache = dir / "cache.jsonl";
    std::vector<PredictionRecord> first;
    {
      stub::StubServer server(stub::lexicon_responder(LexiconRules::defaults(), Task::kAny));
      server.start();
      auto cfg = config_for(server);
      cfg.cache_path = cache;
      ChatClient client(cfg);
      first = classify_remote(client, sentences(6), {});
      CHECK(server.requests() == 6);
    }
    RemoteBackendConfig offline;
    offline.model_name = "stub-model";
    offline.cache_path = cache;
    offline.offline = true;
    ChatClient replay(offline);
    auto again = classify_remote(replay, sentences(6), {});
    REQUIRE(again.size() == first.size());
    for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i].labels == first[i].labels);
    auto miss = replay.complete({{"user", "never asked"}});
    CHECK_FALSE(miss.content.has_value());
    CHECK(miss.error.find("offline") != std::string::npos);
  }

  TEST_CASE("response cache persists entries") {
    testing::TempDir dir;
    {
      ResponseCache c(dir / "c.jsonl");
      c.put("k1", "v1");
      c.put("k2", "v\n2");
    }
    ResponseCache reloaded(dir / "c.jsonl");
    CHECK(reloaded.size() == 2);
    CHECK(reloaded.get("k2") == "v\n2");
    CHECK_FALSE(reloaded.get("k3").has_value());
  }

  TEST_CASE("run_bounded visits every index once") {
    std::vector<std::atomic<int>> hits(100);
    run_bounded(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }

  TEST_CASE("stub rejects malformed requests") {
    stub::StubServer server(stub::fixed_responder("{}"));
    server.start();
    CHECK(server.base_url().starts_with("http://127.0.0.1:"));
    server.stop();
    server.stop();
  }
}
