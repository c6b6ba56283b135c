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

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sdoh/error.hpp"
#include "sdoh/io.hpp"
#include "sdoh/report.hpp"

using namespace sdoh;
using C = Category;

namespace {

report::ModelEval sample_eval() {
  LabelMap gold = {{"a", {C::kSupport}}, {"b", {}}, {"c", {C::kHousing}}};
  LabelMap pred = {{"a", {C::kSupport}}, {"b", {C::kHousing}}, {"c", {}}};
  return {"lexicon", Task::kAny, evaluate(gold, pred)};
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("csv headers") {
    auto e = sample_eval();
    CHECK(report::metrics_csv({e}).starts_with("task,model,granularity,label,"));
    CHECK(report::confusion_csv({e}).starts_with("task,model,granularity,label,"));
    CHECK(report::metrics_markdown({e}).find("lexicon") != std::string::npos);
    auto svg = report::svg_grouped_bars("t", {"A", "B"}, {{"s", {0.5, 1.0}}});
    CHECK(svg.starts_with("<svg"));
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<script") == std::string::npos);
  }

  TEST_CASE("output directories are locked while in use") {
    testing::TempDir dir;
    const auto target = dir / "run";
    {
      report::OutputDir out(target);
      CHECK(std::filesystem::exists(target / std::string(report::kLockName)));
      try {
        report::OutputDir second(target);
        FAIL("second lock acquired");
      } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("locked by another run") != std::string::npos);
      }
    }
    CHECK_FALSE(std::filesystem::exists(target / std::string(report::kLockName)));
    CHECK_NOTHROW(report::OutputDir{target});
  }

  TEST_CASE("inputs are protected from overwrite") {
    testing::TempDir dir;
    report::OutputDir out(dir.path());
    io::write_file_atomic(dir / "notes.jsonl", "{}\n");
    out.protect(dir / "notes.jsonl");
    CHECK_THROWS_AS(out.write("notes.jsonl", "x"), ValidationError);
    CHECK(oracle::slurp(dir / "notes.jsonl") == "{}\n");
    out.write("other.csv", "a\n");
    CHECK(out.outputs().at("other.csv") == io::sha256_hex("a\n"));
  }

  TEST_CASE("manifest is deterministic and records digests") {
    testing::TempDir dir;
    io::write_file_atomic(dir / "in.txt", "hello");
    std::string first;
    for (int i = 0; i < 2; ++i) {
      report::OutputDir out(dir / "run");
      out.write("a.csv", "x,y\n");
      report::Manifest m;
      m.command = "evaluate";
      m.seed = 7;
      m.config = {{"task", "any"}};
      m.inputs["gold"] = dir / "in.txt";
      report::write_manifest(out, m);
      auto text = oracle::slurp(dir / "run" / "manifest.json");
      if (i == 0) first = text;
      else CHECK(text == first);
    }
    auto j = nlohmann::json::parse(first);
    CHECK(j["outputs"]["a.csv"] == io::sha256_hex("x,y\n"));
    CHECK(j["inputs"]["gold"]["sha256"] == io::sha256_hex("hello"));
    CHECK(j["seed"] == 7);
    CHECK(first.find("time") == std::string::npos);
  }
}
