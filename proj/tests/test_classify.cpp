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

#include <fmt/format.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sdoh/classify.hpp"
#include "sdoh/error.hpp"
#include "sdoh/io.hpp"

using namespace sdoh;
using C = Category;

namespace {

const std::vector<C> kSix(kAllCategories.begin(), kAllCategories.end());
constexpr const char* kChildcare =
    "Childcare provider offers after-school tutoring services helping child stay on track academically while "
    "parent undergoes treatment";

std::vector<Exemplar> golden_exemplars() {
  std::vector<Exemplar> out;
  for (const auto& row : io::read_jsonl(testing::golden("few_shot_ten_exemplars.jsonl"))) {
    Exemplar e;
    e.text = row.value["text"].get<std::string>();
    for (const auto& l : row.value["labels"]) e.labels.insert(*category_from_canonical(l.get<std::string>()));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<TrainItem> make_items(std::size_t pos, std::size_t neg) {
  std::vector<TrainItem> items;
  const std::size_t step = (pos + neg) / std::max<std::size_t>(pos, 1);
  std::size_t placed = 0;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    TrainItem t;
    t.sentence_id = fmt::format("s{}", i);
    t.text = "text";
    if (placed < pos && i % step == 0) {
      t.gold = {C::kSupport};
      ++placed;
    }
    items.push_back(std::move(t));
  }
  return items;
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("zero-shot render matches the golden file byte for byte") {
    auto p = build_zero_shot_prompt(kSix, kChildcare);
    CHECK(p.text == oracle::slurp(testing::golden("zero_shot_childcare.txt")));
    CHECK_FALSE(p.escaped);
    CHECK(p.text.find("Training data:") == std::string::npos);
    CHECK(p.text.ends_with("Your JSON response:"));
  }

  TEST_CASE("ten-exemplar few-shot render matches the golden file") {
    auto ex = golden_exemplars();
    REQUIRE(ex.size() == 10);
    auto p = build_few_shot_prompt(kSix, ex, kChildcare);
    CHECK(p.text == oracle::slurp(testing::golden("few_shot_ten.txt")));
  }

  TEST_CASE("prompt builders are pure and validate input") {
    CHECK(build_zero_shot_prompt(kSix, "x").text == build_zero_shot_prompt(kSix, "x").text);
    CHECK_THROWS_AS(build_zero_shot_prompt({}, "x"), ValidationError);
    CHECK_THROWS_AS(build_zero_shot_prompt(kSix, "  "), ValidationError);
    CHECK_THROWS_AS(build_few_shot_prompt(kSix, {}, "x"), ValidationError);
    CHECK_THROWS_AS(build_few_shot_prompt(kSix, {{"t", {}}}, "x"), ValidationError);
  }

  TEST_CASE("label list and negative option") {
    CHECK(render_label_list({C::kParent, C::kHousing}) == "['PARENT', 'HOUSING']");
    PromptOptions o;
    o.include_negative = true;
    CHECK(render_label_list({C::kParent}, o) == "['PARENT', 'NO_SDOH']");
  }

  TEST_CASE("triple backticks in the sample are collapsed") {
    auto p = build_zero_shot_prompt(kSix, "a ```b``` c");
    CHECK(p.escaped);
    CHECK(p.text.find("Text sample: ```a `b` c```") != std::string::npos);
  }

  TEST_CASE("response parsing") {
    auto ok = parse_model_response(R"({"label": ["PARENT", "relat"]})");
    CHECK(ok.status == ParseStatus::kOk);
    CHECK(ok.labels == CategorySet{C::kParent, C::kRelationship});

    auto single = parse_model_response(R"({"label": "PARENT, RELATIONSHIP"})");
    CHECK(single.labels == CategorySet{C::kParent, C::kRelationship});

    auto chatty = parse_model_response("Sure! {\"label\": \"HOUSING\"} Hope that helps.");
    CHECK(chatty.status == ParseStatus::kSalvaged);
    CHECK(chatty.labels == CategorySet{C::kHousing});

    auto none = parse_model_response(R"({"label": ["NO_SDOH"]})");
    CHECK(none.status == ParseStatus::kOk);
    CHECK(none.labels.empty());

    auto partial = parse_model_response(R"({"label": ["HOUSING", "WEATHER"]})");
    CHECK(partial.labels == CategorySet{C::kHousing});
    CHECK(partial.unmapped_tokens == std::vector<std::string>{"WEATHER"});

    CHECK(parse_model_response(R"({"label": ["WEATHER"]})").status == ParseStatus::kFailed);
    CHECK(parse_model_response("no json here").status == ParseStatus::kFailed);
    CHECK(parse_model_response(R"({"category": "HOUSING"})").status == ParseStatus::kFailed);
    CHECK(parse_model_response("{\"label\": \"}\" ").status == ParseStatus::kFailed);
    CHECK(parse_model_response(R"({"note": "{"} {"label": "SUPP"})").status == ParseStatus::kFailed);
    CHECK(parse_model_response(R"(x {"label": "SUPP}"} {"label": "SUPP"})").status == ParseStatus::kFailed);
  }

  TEST_CASE("lexicon baseline") {
    auto rules = LexiconRules::defaults();
    auto a = classify_lexicon(rules, "She LIVES ALONE and is retired.");
    CHECK(a.any == CategorySet{C::kSupport, C::kEmployment});
    CHECK(a.adverse == CategorySet{C::kSupport});
    CHECK(classify_lexicon(rules, "Vital signs are stable.").any.empty());
    auto loaded = LexiconRules::load_csv(std::filesystem::path(SDOH_RESOURCE_DIR) / "lexicon.csv");
    CHECK(loaded.rules().size() == rules.rules().size());
  }

  TEST_CASE("undersampling keeps positives and floor(ratio x positives) negatives") {
    auto items = make_items(877, 28992);
    REQUIRE(std::count_if(items.begin(), items.end(), [](auto& t) { return t.positive(); }) == 877);
    auto out = undersample_negatives(items, 3.0, 99);
    const auto pos = std::count_if(out.begin(), out.end(), [](auto& t) { return t.positive(); });
    CHECK(pos == 877);
    CHECK(out.size() - static_cast<std::size_t>(pos) == 2631);
    // input order preserved
    for (std::size_t i = 1; i < out.size(); ++i) {
      CHECK(std::stoul(out[i - 1].sentence_id.substr(1)) < std::stoul(out[i].sentence_id.substr(1)));
    }
    CHECK(undersample_negatives(items, 3.0, 99) == out);
    CHECK_FALSE(undersample_negatives(items, 3.0, 100) == out);
  }

  TEST_CASE("undersampling edge cases") {
    auto few = make_items(10, 5);
    CHECK(undersample_negatives(few, 2.0, 1).size() == 15);
    CHECK(undersample_negatives(make_items(3, 30), 1.5, 1).size() == 3 + 4);
    CHECK_THROWS_AS(undersample_negatives(few, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(undersample_negatives(make_items(0, 5), 1.0, 1), ValidationError);
  }

  TEST_CASE("imported predictions") {
    const std::string data =
        R"({"sentence_id":"n:0","task":"any","labels":["HOUSING"],"model_id":"m"})"
        "\n"
        R"({"sentence_id":"n:1","task":"adverse","labels":["SUPP","WEATHER"],"model_id":"m"})"
        "\n"
        "garbage\n";
    std::set<std::string> known = {"n:0", "n:1"};
    auto r = parse_predictions(data, &known);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].backend == Backend::kImported);
    CHECK(r.records[1].labels == CategorySet{C::kSupport});
    CHECK(r.diagnostics.size() == 2);
    std::set<std::string> only = {"n:0"};
    CHECK_THROWS_AS(parse_predictions(data, &only), ValidationError);
  }

  TEST_CASE("prediction json shape") {
    PredictionRecord r;
    r.sentence_id = "n:3";
    r.task = Task::kAdverse;
    r.labels = {C::kHousing};
    r.model_id = "lexicon";
    auto j = to_json(r);
    CHECK(j["labels"] == nlohmann::json::array({"HOUSING"}));
    CHECK(j["task"] == "adverse");
    CHECK(j["parse_status"] == "ok");
  }
}
