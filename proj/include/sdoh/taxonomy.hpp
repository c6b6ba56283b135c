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

// SDoH label taxonomy: categories, attributes, the two task projections,
// label-token aliasing for generated model output, and the Z-code map.

#ifndef SDOH_TAXONOMY_HPP_
#define SDOH_TAXONOMY_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdoh/error.hpp"

namespace sdoh {

enum class Category : std::uint8_t {
  kEmployment = 0,
  kHousing,
  kTransportation,
  kParent,
  kRelationship,
  kSupport,
};

inline constexpr std::size_t kNumCategories = 6;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kEmployment, Category::kHousing,      Category::kTransportation,
    Category::kParent,     Category::kRelationship, Category::kSupport,
};

/// Canonical upper-case name, e.g. "EMPLOYMENT".
std::string_view to_string(Category c);
/// Human-facing column name used in reports, e.g. "Social Support".
std::string_view display_name(Category c);
/// Exact canonical name match (case-sensitive). Aliases go through AliasTable.
std::optional<Category> category_from_canonical(std::string_view name);

enum class Task : std::uint8_t { kAny = 0, kAdverse };

inline constexpr std::array<Task, 2> kAllTasks = {Task::kAny, Task::kAdverse};

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

// Category-scoped attributes flattened into one enum. Housing and
// transportation both have an "other" attribute, hence the prefixes.
enum class Attribute : std::uint8_t {
  kEmployed = 0,
  kUnemployed,
  kUnderemployed,
  kRetired,
  kDisability,
  kStudent,
  kFinancialStatus,
  kUndomiciled,
  kHousingOther,
  kDistance,
  kResource,
  kTransportationOther,
  kChildUnder18,
  kMarried,
  kPartnered,
  kWidowed,
  kDivorced,
  kSingle,
  kSupportPlus,
  kSupportMinus,
};

inline constexpr std::size_t kNumAttributes = 20;

Category category_of(Attribute a);
/// Attribute name without its category, e.g. "other", "child_under_18".
std::string_view to_string(Attribute a);
/// Looks up an attribute name within one category; nullopt if the name does
/// not belong to that category.
std::optional<Attribute> parse_attribute(Category c, std::string_view name);
std::vector<Attribute> attributes_of(Category c);

/// True iff the attribute implies a social-work or resource support need.
/// Throws TaxonomyError when the attribute does not belong to the category.
bool is_adverse(Category c, Attribute a);

/// Small value-type set of categories backed by a bitmask.
class CategorySet {
 public:
  constexpr CategorySet() = default;
  CategorySet(std::initializer_list<Category> cs) {
    for (Category c : cs) insert(c);
  }

  static constexpr CategorySet from_bits(std::uint8_t bits) {
    CategorySet s;
    s.bits_ = bits & kMask;
    return s;
  }

  constexpr void insert(Category c) { bits_ |= bit(c); }
  constexpr void erase(Category c) { bits_ &= static_cast<std::uint8_t>(~bit(c)); }
  constexpr bool contains(Category c) const { return (bits_ & bit(c)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  std::size_t size() const;

  constexpr CategorySet operator|(CategorySet o) const { return from_bits(bits_ | o.bits_); }
  constexpr CategorySet operator&(CategorySet o) const { return from_bits(bits_ & o.bits_); }
  constexpr CategorySet& operator|=(CategorySet o) {
    bits_ |= o.bits_;
    return *this;
  }
  constexpr bool is_subset_of(CategorySet o) const { return (bits_ & ~o.bits_) == 0; }
  constexpr bool operator==(const CategorySet&) const = default;

  /// Members in canonical category order.
  std::vector<Category> members() const;

 private:
  static constexpr std::uint8_t kMask = 0x3f;
  static constexpr std::uint8_t bit(Category c) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
  }
  std::uint8_t bits_ = 0;
};

/// Canonical names joined by `sep`, in canonical order.
std::string join_categories(CategorySet s, std::string_view sep = ", ");

/// Labels for one sentence under one task. Empty means No-SDoH (any task) or
/// No-Adverse-SDoH (adverse task).
struct LabelSet {
  Task task = Task::kAny;
  CategorySet labels;
  bool operator==(const LabelSet&) const = default;
};

/// Both task projections of one item; adverse is always a subset of any.
struct TaskLabels {
  CategorySet any;
  CategorySet adverse;

  CategorySet for_task(Task t) const { return t == Task::kAny ? any : adverse; }
  bool operator==(const TaskLabels&) const = default;
};

/// A set of (category, attribute) pairs for one sentence.
class Annotation {
 public:
  Annotation() = default;
  /// Throws TaxonomyError when an attribute is used with the wrong category.
  Annotation(std::initializer_list<std::pair<Category, Attribute>> pairs);

  void add(Category c, Attribute a);
  const std::vector<std::pair<Category, Attribute>>& pairs() const { return pairs_; }
  bool empty() const { return pairs_.empty(); }

 private:
  std::vector<std::pair<Category, Attribute>> pairs_;  // sorted, unique
};

LabelSet project(const Annotation& annotation, Task task);
TaskLabels project_both(const Annotation& annotation);

/// Parses "EMPLOYMENT_retired", "SUPPORT_minus", "HOUSING_financial_status"
/// or a bare "PARENT" (which implies child_under_18). Throws TaxonomyError.
std::pair<Category, Attribute> parse_annotation_label(std::string_view token);
std::string format_annotation_label(Category c, Attribute a);

/// Maps free-form label tokens (seq2seq output, chat responses, imported
/// files) onto categories. Matching is case-insensitive after trimming.
class AliasTable {
 public:
  /// Canonical names plus RELAT, EMPLOY, TRANSPORT, HOUSE and SUPP.
  static AliasTable defaults();
  /// Two-column CSV alias,canonical, merged over the defaults.
  static AliasTable load_csv(const std::filesystem::path& path);

  void add(std::string_view alias, Category c);
  std::optional<Category> lookup(std::string_view token) const;
  const std::map<std::string, Category>& entries() const { return aliases_; }

 private:
  std::map<std::string, Category> aliases_;  // keyed by upper-cased alias
};

/// Throws LabelParseError (carrying the raw token) when unmapped.
Category parse_label_token(std::string_view token, const AliasTable& aliases = AliasTable::defaults());

struct ZCodeMapEntry {
  std::string prefix;  // e.g. "Z56"
  CategorySet mapped;  // adverse-task categories
  std::string description;
};

struct ZCodeMatch {
  CategorySet categories;
  std::optional<std::string> matched_prefix;
  std::optional<std::string> warning;  // unmapped code or out-of-taxonomy target
};

class ZCodeTable {
 public:
  /// The ICD-10-CM Z55-Z75 rows used for patient-level comparison.
  static ZCodeTable defaults();
  /// CSV prefix,categories,description with categories separated by '|'.
  static ZCodeTable load_csv(const std::filesystem::path& path);

  void add(ZCodeMapEntry entry);
  const std::vector<ZCodeMapEntry>& entries() const { return entries_; }

  /// Longest-prefix match on the code with the dot removed. Throws
  /// ValidationError for codes that do not start with 'Z'.
  ZCodeMatch map(std::string_view code) const;

 private:
  std::vector<ZCodeMapEntry> entries_;
};

inline ZCodeMatch map_zcode(std::string_view code, const ZCodeTable& table = ZCodeTable::defaults()) {
  return table.map(code);
}

}  // namespace sdoh

#endif  // SDOH_TAXONOMY_HPP_
