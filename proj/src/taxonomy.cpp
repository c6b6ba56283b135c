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

#include "sdoh/taxonomy.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>

#include "sdoh/io.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

struct CategoryInfo {
  std::string_view canonical;
  std::string_view display;
};

constexpr std::array<CategoryInfo, kNumCategories> kCategoryInfo = {{
    {"EMPLOYMENT", "Employment"},
    {"HOUSING", "Housing"},
    {"TRANSPORTATION", "Transportation"},
    {"PARENT", "Parent"},
    {"RELATIONSHIP", "Relationship"},
    {"SUPPORT", "Social Support"},
}};

struct AttributeInfo {
  Attribute attribute;
  Category category;
  std::string_view name;
  bool adverse;
};

// Adverse lists: employment {unemployed, underemployed, disability}; every
// housing and transportation attribute; parent of a minor; relationship
// {widowed, divorced, single}; absence of support.
constexpr std::array<AttributeInfo, kNumAttributes> kAttributeInfo = {{
    {Attribute::kEmployed, Category::kEmployment, "employed", false},
    {Attribute::kUnemployed, Category::kEmployment, "unemployed", true},
    {Attribute::kUnderemployed, Category::kEmployment, "underemployed", true},
    {Attribute::kRetired, Category::kEmployment, "retired", false},
    {Attribute::kDisability, Category::kEmployment, "disability", true},
    {Attribute::kStudent, Category::kEmployment, "student", false},
    {Attribute::kFinancialStatus, Category::kHousing, "financial_status", true},
    {Attribute::kUndomiciled, Category::kHousing, "undomiciled", true},
    {Attribute::kHousingOther, Category::kHousing, "other", true},
    {Attribute::kDistance, Category::kTransportation, "distance", true},
    {Attribute::kResource, Category::kTransportation, "resource", true},
    {Attribute::kTransportationOther, Category::kTransportation, "other", true},
    {Attribute::kChildUnder18, Category::kParent, "child_under_18", true},
    {Attribute::kMarried, Category::kRelationship, "married", false},
    {Attribute::kPartnered, Category::kRelationship, "partnered", false},
    {Attribute::kWidowed, Category::kRelationship, "widowed", true},
    {Attribute::kDivorced, Category::kRelationship, "divorced", true},
    {Attribute::kSingle, Category::kRelationship, "single", true},
    {Attribute::kSupportPlus, Category::kSupport, "plus", false},
    {Attribute::kSupportMinus, Category::kSupport, "minus", true},
}};

const AttributeInfo& info(Attribute a) { return kAttributeInfo[static_cast<std::size_t>(a)]; }

}  // namespace

std::string_view to_string(Category c) { return kCategoryInfo[static_cast<std::size_t>(c)].canonical; }

std::string_view display_name(Category c) { return kCategoryInfo[static_cast<std::size_t>(c)].display; }

std::optional<Category> category_from_canonical(std::string_view name) {
  for (Category c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Task t) { return t == Task::kAny ? "any" : "adverse"; }

Task parse_task(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "any") return Task::kAny;
  if (t == "adverse") return Task::kAdverse;
  throw ValidationError(fmt::format("unknown task '{}' (expected any|adverse)", s));
}

Category category_of(Attribute a) { return info(a).category; }

std::string_view to_string(Attribute a) { return info(a).name; }

std::optional<Attribute> parse_attribute(Category c, std::string_view name) {
  auto n = text::lower(text::trim(name));
  for (const auto& ai : kAttributeInfo) {
    if (ai.category == c && ai.name == n) return ai.attribute;
  }
  return std::nullopt;
}

std::vector<Attribute> attributes_of(Category c) {
  std::vector<Attribute> out;
  for (const auto& ai : kAttributeInfo) {
    if (ai.category == c) out.push_back(ai.attribute);
  }
  return out;
}

bool is_adverse(Category c, Attribute a) {
  const auto& ai = info(a);
  if (ai.category != c) {
    throw TaxonomyError(fmt::format("attribute '{}' does not belong to {}", ai.name, to_string(c)));
  }
  return ai.adverse;
}

std::size_t CategorySet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Category> CategorySet::members() const {
  std::vector<Category> out;
  for (Category c : kAllCategories) {
    if (contains(c)) out.push_back(c);
  }
  return out;
}

std::string join_categories(CategorySet s, std::string_view sep) {
  std::string out;
  for (Category c : s.members()) {
    if (!out.empty()) out += sep;
    out += to_string(c);
  }
  return out;
}

Annotation::Annotation(std::initializer_list<std::pair<Category, Attribute>> pairs) {
  for (const auto& [c, a] : pairs) add(c, a);
}

void Annotation::add(Category c, Attribute a) {
  if (category_of(a) != c) {
    throw TaxonomyError(fmt::format("attribute '{}' does not belong to {}", to_string(a), to_string(c)));
  }
  auto p = std::make_pair(c, a);
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), p);
  if (it == pairs_.end() || *it != p) pairs_.insert(it, p);
}

LabelSet project(const Annotation& annotation, Task task) {
  LabelSet out{task, {}};
  for (const auto& [c, a] : annotation.pairs()) {
    if (task == Task::kAny || is_adverse(c, a)) out.labels.insert(c);
  }
  return out;
}

TaskLabels project_both(const Annotation& annotation) {
  return {project(annotation, Task::kAny).labels, project(annotation, Task::kAdverse).labels};
}

std::pair<Category, Attribute> parse_annotation_label(std::string_view token) {
  auto t = text::trim(token);
  auto us = t.find('_');
  std::string cat_part = text::upper(t.substr(0, us));
  auto cat = category_from_canonical(cat_part);
  if (!cat) throw TaxonomyError(fmt::format("unknown category in annotation label '{}'", token));
  if (us == std::string_view::npos) {
    if (*cat == Category::kParent) return {*cat, Attribute::kChildUnder18};
    throw TaxonomyError(fmt::format("annotation label '{}' lacks an attribute", token));
  }
  auto attr = parse_attribute(*cat, t.substr(us + 1));
  if (!attr) throw TaxonomyError(fmt::format("unknown attribute in annotation label '{}'", token));
  return {*cat, *attr};
}

std::string format_annotation_label(Category c, Attribute a) {
  return fmt::format("{}_{}", to_string(c), to_string(a));
}

AliasTable AliasTable::defaults() {
  AliasTable t;
  for (Category c : kAllCategories) t.add(to_string(c), c);
  t.add("RELAT", Category::kRelationship);
  t.add("EMPLOY", Category::kEmployment);
  t.add("TRANSPORT", Category::kTransportation);
  t.add("HOUSE", Category::kHousing);
  t.add("SUPP", Category::kSupport);
  return t;
}

AliasTable AliasTable::load_csv(const std::filesystem::path& path) {
  AliasTable t = defaults();
  auto table = io::CsvTable::load(path);
  if (!table.has_column("alias") || !table.has_column("canonical")) {
    throw ValidationError(path.string() + ": alias table needs columns alias,canonical");
  }
  for (std::size_t r = 0; r < table.size(); ++r) {
    auto canonical = category_from_canonical(text::upper(text::trim(table.get(r, "canonical"))));
    if (!canonical) {
      throw ValidationError(fmt::format("{}:{}: unknown canonical category '{}'", path.string(), table.line(r),
                                        table.get(r, "canonical")));
    }
    t.add(table.get(r, "alias"), *canonical);
  }
  return t;
}

void AliasTable::add(std::string_view alias, Category c) { aliases_[text::upper(text::trim(alias))] = c; }

std::optional<Category> AliasTable::lookup(std::string_view token) const {
  auto it = aliases_.find(text::upper(text::trim(token)));
  if (it == aliases_.end()) return std::nullopt;
  return it->second;
}

Category parse_label_token(std::string_view token, const AliasTable& aliases) {
  auto c = aliases.lookup(token);
  if (!c) throw LabelParseError(std::string(token));
  return *c;
}

ZCodeTable ZCodeTable::defaults() {
  using C = Category;
  ZCodeTable t;
  // Education: recognised, no category.
  t.add({"Z55", {}, "Education and literacy"});
  t.add({"Z56", {C::kEmployment}, "Employment and unemployment"});
  t.add({"Z59", {C::kHousing, C::kSupport, C::kEmployment}, "Housing and economic circumstances"});
  t.add({"Z60", {C::kSupport}, "Social environment"});
  t.add({"Z62", {C::kParent, C::kSupport}, "Upbringing"});
  t.add({"Z63", {C::kSupport}, "Other problems related to primary support group, including family circumstances"});
  t.add({"Z75", {C::kHousing, C::kTransportation}, "Problems related to medical facilities and other health care"});
  return t;
}

ZCodeTable ZCodeTable::load_csv(const std::filesystem::path& path) {
  ZCodeTable t;
  auto table = io::CsvTable::load(path);
  if (!table.has_column("prefix") || !table.has_column("categories")) {
    throw ValidationError(path.string() + ": Z-code table needs columns prefix,categories[,description]");
  }
  for (std::size_t r = 0; r < table.size(); ++r) {
    ZCodeMapEntry e;
    e.prefix = text::upper(text::trim(table.get(r, "prefix")));
    e.description = table.get(r, "description");
    for (const auto& tok : text::split(table.get(r, "categories"), '|')) {
      auto name = text::upper(text::trim(tok));
      if (name.empty()) continue;
      auto c = category_from_canonical(name);
      if (!c) {
        throw ValidationError(fmt::format("{}:{}: unknown category '{}'", path.string(), table.line(r), tok));
      }
      e.mapped.insert(*c);
    }
    t.add(std::move(e));
  }
  return t;
}

void ZCodeTable::add(ZCodeMapEntry entry) {
  entry.prefix = text::replace_all(text::upper(entry.prefix), ".", "");
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.prefix == entry.prefix; });
  if (it != entries_.end()) {
    *it = std::move(entry);
  } else {
    entries_.push_back(std::move(entry));
  }
}

ZCodeMatch ZCodeTable::map(std::string_view code) const {
  std::string norm = text::replace_all(text::upper(text::trim(code)), ".", "");
  if (norm.empty() || norm.front() != 'Z') throw ValidationError(fmt::format("not a Z-code: '{}'", code));
  const ZCodeMapEntry* best = nullptr;
  for (const auto& e : entries_) {
    if (norm.rfind(e.prefix, 0) == 0 && (!best || e.prefix.size() > best->prefix.size())) best = &e;
  }
  ZCodeMatch m;
  if (!best) {
    m.warning = fmt::format("unmapped Z-code '{}'", code);
    return m;
  }
  m.categories = best->mapped;
  m.matched_prefix = best->prefix;
  if (best->mapped.empty()) {
    m.warning = fmt::format("Z-code '{}' ({}) has no category in the SDoH taxonomy", code, best->description);
  }
  return m;
}

}  // namespace sdoh
