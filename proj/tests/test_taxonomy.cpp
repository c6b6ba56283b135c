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

#include "helpers.hpp"
#include "sdoh/error.hpp"
#include "sdoh/taxonomy.hpp"

using namespace sdoh;
using C = Category;
using A = Attribute;

TEST_SUITE("taxonomy") {
  TEST_CASE("category names round-trip") {
    for (C c : kAllCategories) CHECK(category_from_canonical(to_string(c)) == c);
    CHECK_FALSE(category_from_canonical("EDUCATION").has_value());
    CHECK(display_name(C::kSupport) == "Social Support");
  }

  TEST_CASE("attributes belong to one category") {
    std::size_t total = 0;
    for (C c : kAllCategories) {
      for (A a : attributes_of(c)) {
        CHECK(category_of(a) == c);
        CHECK(parse_attribute(c, to_string(a)) == a);
        ++total;
      }
    }
    CHECK(total == kNumAttributes);
    CHECK(attributes_of(C::kEmployment).size() == 6);
  }

  TEST_CASE("adverse attributes") {
    CHECK(is_adverse(C::kEmployment, A::kUnemployed));
    CHECK(is_adverse(C::kEmployment, A::kDisability));
    CHECK_FALSE(is_adverse(C::kEmployment, A::kRetired));
    CHECK_FALSE(is_adverse(C::kEmployment, A::kStudent));
    CHECK(is_adverse(C::kHousing, A::kFinancialStatus));
    CHECK(is_adverse(C::kTransportation, A::kDistance));
    CHECK(is_adverse(C::kParent, A::kChildUnder18));
    CHECK(is_adverse(C::kRelationship, A::kWidowed));
    CHECK(is_adverse(C::kRelationship, A::kSingle));
    CHECK_FALSE(is_adverse(C::kRelationship, A::kMarried));
    CHECK_FALSE(is_adverse(C::kRelationship, A::kPartnered));
    CHECK(is_adverse(C::kSupport, A::kSupportMinus));
    CHECK_FALSE(is_adverse(C::kSupport, A::kSupportPlus));
  }

  TEST_CASE("annotation labels parse and project per task") {
    auto [c, a] = parse_annotation_label("RELATIONSHIP_widowed");
    CHECK(c == C::kRelationship);
    CHECK(a == A::kWidowed);
    CHECK(format_annotation_label(C::kSupport, A::kSupportPlus) == "SUPPORT_plus");
    CHECK_THROWS_AS(parse_annotation_label("HOUSING_married"), TaxonomyError);
    CHECK_THROWS_AS(parse_annotation_label("EDUCATION_none"), TaxonomyError);
    CHECK_THROWS_AS(Annotation({{C::kHousing, A::kMarried}}), TaxonomyError);

    Annotation ann{{C::kRelationship, A::kMarried}, {C::kEmployment, A::kUnemployed}};
    auto both = project_both(ann);
    CHECK(both.any == CategorySet{C::kRelationship, C::kEmployment});
    CHECK(both.adverse == CategorySet{C::kEmployment});
    CHECK(both.adverse.is_subset_of(both.any));
    CHECK(project(Annotation{}, Task::kAdverse).labels.empty());
  }

  TEST_CASE("category sets") {
    CategorySet s{C::kSupport, C::kEmployment};
    CHECK(s.size() == 2);
    CHECK(s.members() == std::vector<C>{C::kEmployment, C::kSupport});
    CHECK(join_categories(s) == "EMPLOYMENT, SUPPORT");
    CHECK(CategorySet::from_bits(0xff).size() == 6);
  }

  TEST_CASE("label aliases are case-insensitive and extendable") {
    auto t = AliasTable::defaults();
    CHECK(t.lookup("relat") == C::kRelationship);
    CHECK(t.lookup(" Support ") == C::kSupport);
    CHECK(parse_label_token("TRANSPORT") == C::kTransportation);
    CHECK_THROWS_AS(parse_label_token("WEATHER"), LabelParseError);
    try {
      parse_label_token("WEATHER");
    } catch (const LabelParseError& e) {
      CHECK(e.raw_token() == "WEATHER");
    }
    auto loaded = AliasTable::load_csv(std::filesystem::path(SDOH_RESOURCE_DIR) / "label_aliases.csv");
    CHECK(loaded.lookup("family") == C::kSupport);
    CHECK(loaded.lookup("RELAT") == C::kRelationship);
  }

  TEST_CASE("every Z-code row maps to its categories") {
    const std::vector<std::pair<std::string, CategorySet>> rows = {
        {"Z55", {}},
        {"Z56", {C::kEmployment}},
        {"Z59", {C::kHousing, C::kSupport, C::kEmployment}},
        {"Z60", {C::kSupport}},
        {"Z62", {C::kParent, C::kSupport}},
        {"Z63", {C::kSupport}},
        {"Z75", {C::kHousing, C::kTransportation}},
    };
    for (const auto& table : {ZCodeTable::defaults(),
                              ZCodeTable::load_csv(std::filesystem::path(SDOH_RESOURCE_DIR) / "zcode_map.csv")}) {
      REQUIRE(table.entries().size() == rows.size());
      for (const auto& [prefix, cats] : rows) {
        CAPTURE(prefix);
        auto m = table.map(prefix + ".0");
        CHECK(m.categories == cats);
        CHECK(m.matched_prefix == prefix);
      }
    }
    auto edu = map_zcode("Z55.0");
    CHECK(edu.categories.empty());
    CHECK(edu.warning.has_value());
    auto unmapped = map_zcode("Z91.81");
    CHECK(unmapped.categories.empty());
    CHECK_FALSE(unmapped.matched_prefix.has_value());
    CHECK(unmapped.warning.has_value());
    CHECK(map_zcode("z5941").categories == CategorySet{C::kHousing, C::kSupport, C::kEmployment});
    CHECK_THROWS_AS(map_zcode("E11.9"), ValidationError);
  }

  TEST_CASE("longest prefix wins") {
    auto t = ZCodeTable::defaults();
    t.add({"Z590", {C::kHousing}, "Homelessness"});
    CHECK(t.map("Z59.01").categories == CategorySet{C::kHousing});
    CHECK(t.map("Z59.4").categories.size() == 3);
  }
}
