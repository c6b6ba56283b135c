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

#include <random>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "sdoh/error.hpp"
#include "sdoh/evalkit.hpp"

using namespace sdoh;
using C = Category;

namespace {

std::vector<TrainItem> items(std::size_t pos, std::size_t neg, bool synthetic = false) {
  std::vector<TrainItem> out;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    TrainItem t;
    t.sentence_id = fmt::format("{}{}", synthetic ? "syn" : "s", i);
    t.text = "t";
    t.synthetic = synthetic;
    if (i < pos) t.gold = {C::kHousing};
    out.push_back(std::move(t));
  }
  return out;
}

std::set<std::string> ids(const std::vector<TrainItem>& v) {
  std::set<std::string> out;
  for (const auto& t : v)
    if (!t.synthetic) out.insert(t.sentence_id);
  return out;
}

}  // namespace

TEST_SUITE("evalkit") {
  TEST_CASE("label names and order") {
    CHECK(EvalLabel(C::kSupport).name() == "SUPPORT");
    CHECK(EvalLabel::no_sdoh().name() == "NO_SDOH");
    CHECK(EvalLabel::any_sdoh().display() == "Any SDoH");
    CHECK(EvalLabel::parse("no_sdoh") == EvalLabel::no_sdoh());
    CHECK(seven_labels().size() == 7);
    auto report = report_label_order();
    REQUIRE(report.size() == 7);
    CHECK(report[0] == EvalLabel::no_sdoh());
    CHECK(report[1] == EvalLabel(C::kEmployment));
    CHECK(report[5] == EvalLabel(C::kSupport));
    CHECK(report[6] == EvalLabel(C::kTransportation));
  }

  TEST_CASE("metrics from counts") {
    ConfusionCounts c;
    c.tp = 89;
    c.fp = 3;
    c.fn = 4;
    c.tn = 58;
    auto m = metrics(c);
    CHECK(m.recall == doctest::Approx(89.0 / 93).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(89.0 / 92).epsilon(1e-12));
    ConfusionCounts zero;
    CHECK(metrics(zero).f1 == 0.0);
    CHECK(macro_f1(std::vector<double>{1.0, 0.5}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(macro_f1(std::vector<double>{}), ValidationError);
  }

  TEST_CASE("confusion counts match a brute-force oracle on 1000 units") {
    std::mt19937_64 g(7);
    LabelMap gold, pred;
    std::vector<std::uint8_t> gb, pb;
    for (int i = 0; i < 1000; ++i) {
      auto draw = [&] {
        const auto r = g() % 10;
        return r < 4 ? std::uint8_t{0} : static_cast<std::uint8_t>(g() & 0x3f);
      };
      auto a = draw(), b = draw();
      gold[fmt::format("u{:04}", i)] = CategorySet::from_bits(a);
      pred[fmt::format("u{:04}", i)] = CategorySet::from_bits(b);
      gb.push_back(a);
      pb.push_back(b);
    }
    auto report = evaluate(gold, pred);
    CHECK(report.units == 1000);
    double sum7 = 0, sum6 = 0;
    for (const auto& lr : report.labels) {
      oracle::Counts expect;
      if (lr.counts.label.kind() == EvalLabel::Kind::kNoSdoh) {
        expect = oracle::confusion_empty(gb, pb, true);
      } else {
        expect = oracle::confusion_bit(gb, pb, static_cast<int>(lr.counts.label.category()));
        sum6 += oracle::f1(expect);
      }
      sum7 += oracle::f1(expect);
      CAPTURE(lr.counts.label.name());
      CHECK(lr.counts.tp == expect.tp);
      CHECK(lr.counts.fp == expect.fp);
      CHECK(lr.counts.fn == expect.fn);
      CHECK(lr.counts.tn == expect.tn);
      CHECK(lr.metrics.f1 == doctest::Approx(oracle::f1(expect)).epsilon(1e-12));
    }
    CHECK(report.macro_f1 == doctest::Approx(sum7 / 7).epsilon(1e-12));
    CHECK(report.macro_f1_six == doctest::Approx(sum6 / 6).epsilon(1e-12));
    auto any = confusion(gold, pred, EvalLabel::any_sdoh());
    auto expect_any = oracle::confusion_empty(gb, pb, false);
    CHECK(any.tp == expect_any.tp);
    CHECK(any.tn == expect_any.tn);
  }

  TEST_CASE("misaligned maps are rejected") {
    LabelMap a = {{"x", {}}, {"y", {}}};
    LabelMap b = {{"x", {}}, {"z", {}}};
    CHECK_THROWS_AS(check_aligned(a, b), ValidationError);
    CHECK_THROWS_AS(evaluate(a, b), ValidationError);
  }

  TEST_CASE("agreement hand case") {
    std::vector<int> a = {1, 1, 0, 0}, b = {1, 0, 0, 0};
    CHECK(cohen_kappa(a, b) == 0.5);
    CHECK(krippendorff_alpha({{1, 1}, {1, 0}, {0, 0}, {0, 0}}) == doctest::Approx(8.0 / 15).epsilon(1e-15));
    CHECK(cohen_kappa(std::vector<int>{1, 1}, std::vector<int>{1, 1}) == 1.0);
    CHECK(krippendorff_alpha({{1, 1}, {1, 1}}) == 1.0);
    CHECK_THROWS_AS(cohen_kappa(a, std::vector<int>{1}), ValidationError);
    CHECK_THROWS_AS(krippendorff_alpha({{1}, {0}}), ValidationError);
  }

  TEST_CASE("agreement matches brute-force oracles on random instances") {
    std::mt19937_64 g(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + static_cast<int>(g() % 11);
      const int k = 2 + static_cast<int>(g() % 3);
      std::vector<int> a, b;
      std::vector<std::vector<int>> units;
      for (int i = 0; i < n; ++i) {
        a.push_back(static_cast<int>(g() % k));
        b.push_back(static_cast<int>(g() % k));
        std::vector<int> u = {a.back(), b.back()};
        if (g() % 4 == 0) u.push_back(static_cast<int>(g() % k));
        if (g() % 6 == 0) u.resize(1);
        units.push_back(u);
      }
      CHECK(cohen_kappa(a, b) == doctest::Approx(oracle::cohen_kappa(a, b)).epsilon(1e-9));
      bool pairable = std::any_of(units.begin(), units.end(), [](auto& u) { return u.size() >= 2; });
      if (pairable) {
        CHECK(krippendorff_alpha(units) == doctest::Approx(oracle::krippendorff_alpha(units)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("class-wise agreement report") {
    LabelMap a = {{"1", {C::kSupport}}, {"2", {}}, {"3", {C::kHousing}}, {"4", {}}};
    LabelMap b = {{"1", {C::kSupport}}, {"2", {C::kSupport}}, {"3", {C::kHousing}}, {"4", {}}};
    auto r = agreement(a, b);
    REQUIRE(r.rows.size() == 7);
    for (const auto& row : r.rows) {
      CHECK(row.units == 4);
      if (row.label == EvalLabel(C::kHousing)) CHECK(row.kappa == 1.0);
      if (row.label == EvalLabel(C::kSupport)) CHECK(row.kappa == doctest::Approx(0.5));
    }
  }

  TEST_CASE("discrepancy pairs") {
    LabelMap gold = {{"a", {C::kSupport}}, {"b", {}}, {"c", {C::kParent, C::kHousing}}, {"d", {}}, {"e", {}}};
    LabelMap pred = {{"a", {}}, {"b", {C::kEmployment}}, {"c", {C::kParent, C::kSupport}}, {"d", {C::kEmployment}},
                     {"e", {}}};
    auto rows = discrepancy_table(gold, pred);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].gold == EvalLabel::no_sdoh());
    CHECK(rows[0].predicted == EvalLabel(C::kEmployment));
    CHECK(rows[0].count == 2);
    int total = 0;
    for (const auto& r : rows) total += static_cast<int>(r.count);
    CHECK(total == 4);
  }

  TEST_CASE("ablation removes floor(p%) of each class with nested removals") {
    auto train = items(40, 160);
    auto pool = items(30, 0, true);
    AblationOptions o;
    o.seed = 5;
    auto plan = ablation_schedule(train, pool, o);
    CHECK(plan.exports.size() == 16);
    std::set<std::string> previous = ids(train);
    for (const auto& e : plan.exports) {
      if (e.with_synthetic) continue;
      CAPTURE(e.percent);
      CHECK(e.gold_positives == 40 - (40 * static_cast<std::size_t>(e.percent)) / 100);
      CHECK(e.gold_negatives == 160 - (160 * static_cast<std::size_t>(e.percent)) / 100);
      auto now = ids(e.items);
      CHECK(std::includes(previous.begin(), previous.end(), now.begin(), now.end()));
      previous = now;
    }
    for (const auto& e : plan.exports) {
      if (e.percent == 100 && !e.with_synthetic) CHECK(e.items.empty());
      if (e.with_synthetic) CHECK(e.synthetic == 30);
    }
    for (const auto& r : plan.report) {
      if (r.percent == 100 && !r.with_synthetic) {
        REQUIRE(r.macro_f1.has_value());
        CHECK(*r.macro_f1 == 0.0);
        REQUIRE(r.f1.has_value());
        for (const auto& [label, f] : *r.f1) CHECK(f == 0.0);
      } else {
        CHECK_FALSE(r.macro_f1.has_value());
      }
    }
    auto again = ablation_schedule(train, pool, o);
    for (std::size_t i = 0; i < plan.exports.size(); ++i) CHECK(plan.exports[i].items == again.exports[i].items);
  }

  TEST_CASE("ablation argument checks") {
    AblationOptions o;
    o.percents = {101};
    CHECK_THROWS_AS(ablation_schedule(items(2, 2), {}, o), ValidationError);
    o.percents = {100};
    CHECK_THROWS_AS(ablation_schedule(items(2, 2), {}, o), ValidationError);
    o.with_synthetic = false;
    CHECK_NOTHROW(ablation_schedule(items(2, 2), {}, o));
  }

  TEST_CASE("patient aggregation") {
    NoteCollection notes(3);
    notes[0].note_id = "N1";
    notes[0].patient_id = "P1";
    notes[1].note_id = "N2";
    notes[1].patient_id = "P1";
    notes[2].note_id = "N3";
    notes[2].patient_id = "P2";
    LabelMap s = {{"N1:0", {C::kSupport}}, {"N2:4", {C::kHousing}}, {"N3:0", {}}};
    auto p = patient_aggregate(s, notes);
    CHECK(p.at("P1") == CategorySet{C::kSupport, C::kHousing});
    CHECK(p.at("P2").empty());
    CHECK(note_of_sentence("N7:12") == "N7");
    CHECK(note_of_sentence("plain") == "plain");
    CHECK_THROWS_AS(patient_aggregate(LabelMap{{"N9:0", {}}}, notes), ValidationError);
  }

  TEST_CASE("z-code comparison reproduces the published patient matrices") {
    auto u = fixtures::adverse_universe();
    auto cmp = compare_zcodes(u.gold, u.model, u.zcodes);
    CHECK(cmp.model_any.tp == fixtures::kAdverseModel.tp);
    CHECK(cmp.model_any.fp == fixtures::kAdverseModel.fp);
    CHECK(cmp.model_any.fn == fixtures::kAdverseModel.fn);
    CHECK(cmp.model_any.tn == fixtures::kAdverseModel.tn);
    CHECK(cmp.zcode_any.tp == fixtures::kAdverseZcode.tp);
    CHECK(cmp.zcode_any.fp == fixtures::kAdverseZcode.fp);
    CHECK(cmp.zcode_any.fn == fixtures::kAdverseZcode.fn);
    CHECK(cmp.zcode_any.tn == fixtures::kAdverseZcode.tn);
    CHECK(cmp.warnings.size() == 2);
    CHECK(metrics(cmp.zcode_any).recall == doctest::Approx(1.0 / 48));
  }

  TEST_CASE("z-codes for unknown patients are rejected") {
    auto u = fixtures::adverse_universe();
    u.zcodes.push_back({"NOBODY", "Z59.0", "2023-01-01", 99});
    CHECK_THROWS_AS(compare_zcodes(u.gold, u.model, u.zcodes), ValidationError);
  }

  TEST_CASE("z-code and gold file parsing") {
    auto z = parse_zcodes("patient_id,code,date\nP1,Z59.0,2023-01-01\n");
    REQUIRE(z.size() == 1);
    CHECK(z[0].line == 2);
    CHECK_THROWS_AS(parse_zcodes("patient,code\nP1,Z59\n"), ValidationError);
    auto g = parse_gold(
        R"({"sentence_id":"a","labels":["RELATIONSHIP_married","EMPLOYMENT_unemployed"]})"
        "\n"
        R"({"sentence_id":"b","labels":[]})"
        "\n");
    CHECK(g.at("a").any == CategorySet{C::kRelationship, C::kEmployment});
    CHECK(g.at("a").adverse == CategorySet{C::kEmployment});
    CHECK(project_gold(g, Task::kAdverse).at("b").empty());
    CHECK_THROWS_AS(parse_gold(R"({"sentence_id":"a","labels":["HOUSING_married"]})"), ValidationError);
  }
}
