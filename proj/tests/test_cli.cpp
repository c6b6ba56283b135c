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

#include <algorithm>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sdoh/cli.hpp"
#include "sdoh/error.hpp"
#include "sdoh/io.hpp"
#include "sdoh/report.hpp"

using namespace sdoh;

namespace {

int sdoh_run(std::vector<std::string> args) {
  args.push_back("-q");
  return cli::run(args);
}

std::size_t lines(const std::filesystem::path& p) {
  auto s = oracle::slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage and validation errors exit 1") {
    CHECK(cli::run(std::vector<std::string>{}) == cli::kExitValidation);
    CHECK(sdoh_run({"frobnicate"}) == cli::kExitValidation);
    testing::TempDir dir;
    CHECK(sdoh_run({"--out", (dir / "o").string(), "filter", "--notes", (dir / "missing.jsonl").string()}) ==
          cli::kExitValidation);
  }

  TEST_CASE("transport failure exits 2 after writing outputs") {
    testing::TempDir dir;
    io::write_file_atomic(dir / "s.jsonl", R"({"sentence_id":"n:0","note_id":"n","text":"Pt lives alone."})" "\n");
    const int rc = sdoh_run({"--out", (dir / "o").string(), "classify", "--backend", "remote", "--sentences",
                             (dir / "s.jsonl").string(), "--base-url", "http://127.0.0.1:1/v1", "--max-retries", "0",
                             "--timeout-ms", "300"});
    CHECK(rc == cli::kExitTransport);
    CHECK(std::filesystem::exists(dir / "o" / "predictions.jsonl"));
  }

  TEST_CASE("config errors carry line numbers") {
    try {
      cli::parse_config("task: any\nfilter:\n  min_tokens: 10\n  bogus: 1\n");
      FAIL("accepted an unknown key");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("filter.bogus") != std::string::npos);
      CHECK(msg.find("line 4") != std::string::npos);
    }
    auto c = cli::parse_config("seed: 5\nfilter:\n  min_tokens: 10\n");
    CHECK(c.seed == 5);
    CHECK(c.filter.min_tokens == 10);
    CHECK(cli::parse_config("").seed == cli::kDefaultSeed);
  }

  TEST_CASE("flags override config values") {
    testing::TempDir dir;
    io::write_file_atomic(dir / "c.yaml", "paths:\n  corpus: " + testing::demo("notes.jsonl").string() +
                                              "\nfilter:\n  min_tokens: 499\n");
    CHECK(sdoh_run({"--config", (dir / "c.yaml").string(), "--out", (dir / "a").string(), "filter"}) == 0);
    CHECK(lines(dir / "a" / "notes.jsonl") < 44);
    CHECK(sdoh_run({"--config", (dir / "c.yaml").string(), "--out", (dir / "b").string(), "filter", "--min-tokens",
                    "150"}) == 0);
    CHECK(lines(dir / "b" / "notes.jsonl") == 44);
  }

  TEST_CASE("repeated runs are byte-identical") {
    testing::TempDir dir;
    for (const char* o : {"a", "b"}) {
      REQUIRE(sdoh_run({"--out", (dir / o).string(), "filter", "--notes", testing::demo("notes.jsonl").string()}) ==
              0);
    }
    for (const char* f : {"notes.jsonl", "rejections.csv", "filter_summary.csv"}) {
      CAPTURE(f);
      CHECK(oracle::slurp(dir / "a" / f) == oracle::slurp(dir / "b" / f));
    }
    auto outputs = [&](const char* o) {
      return nlohmann::json::parse(oracle::slurp(dir / o / "manifest.json"))["outputs"];
    };
    CHECK(outputs("a") == outputs("b"));
  }

  TEST_CASE("a held lock makes the run fail") {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "o");
    io::write_file_atomic(dir / "o" / std::string(report::kLockName), "1\n");
    CHECK(sdoh_run({"--out", (dir / "o").string(), "filter", "--notes", testing::demo("notes.jsonl").string()}) ==
          cli::kExitValidation);
  }

  TEST_CASE("empty report") {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "empty");
    CHECK(sdoh_run({"--out", (dir / "r").string(), "report", "--from", (dir / "empty").string()}) == 0);
    CHECK(oracle::slurp(dir / "r" / "report.md").find("No results found.") != std::string::npos);
  }
}
