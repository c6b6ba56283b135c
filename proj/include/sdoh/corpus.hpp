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

// Note collections: loading, inclusion filtering and patient-level splits.

#ifndef SDOH_CORPUS_HPP_
#define SDOH_CORPUS_HPP_

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdoh/error.hpp"
#include "sdoh/segment.hpp"

namespace sdoh {

enum class AuthorRole : std::uint8_t {
  kPhysician = 0,
  kPhysicianAssistant,
  kNursePractitioner,
  kRegisteredNurse,
  kSocialWorker,
};

std::string_view to_string(AuthorRole r);
/// Accepts the snake_case names case-insensitively, with spaces or hyphens
/// in place of underscores.
std::optional<AuthorRole> parse_author_role(std::string_view s);

using Date = std::chrono::year_month_day;

/// ISO-8601 calendar date; a trailing time part ("T...") is ignored.
std::optional<Date> parse_date(std::string_view s);
std::string format_date(Date d);

struct Demographics {
  std::string gender;
  std::string race;
  std::string ethnicity;
};

struct Note {
  std::string note_id;
  std::string patient_id;
  AuthorRole author_role = AuthorRole::kPhysician;
  Date date{};
  std::string text;
  std::optional<Demographics> demographics;
};

nlohmann::json to_json(const Note& note);

using NoteCollection = std::vector<Note>;

enum class NoteFormat { kJsonl, kCsv };

NoteFormat parse_note_format(std::string_view s);

struct LoadResult {
  NoteCollection notes;
  std::vector<Diagnostic> diagnostics;
};

/// Loads every valid record. Malformed records, unknown roles and duplicate
/// note ids become line-numbered diagnostics; an unreadable file throws.
LoadResult load_notes(const std::filesystem::path& path, NoteFormat format);
LoadResult parse_notes(std::string_view data, NoteFormat format);

/// Number of maximal runs of non-whitespace characters.
std::size_t count_tokens(std::string_view text);

/// Keeps notes dated within [first_treatment - days_before,
/// last_treatment + days_after] of their patient's treatment course.
struct DateWindow {
  struct Course {
    Date first_treatment;
    Date last_treatment;
  };
  std::map<std::string, Course> courses;  // by patient_id
  int days_before = 30;
  int days_after = 90;

  bool contains(const Note& note) const;
};

struct FilterPolicy {
  std::size_t min_tokens = 150;
  std::size_t max_section_tokens = 500;
  std::set<AuthorRole> section_cap_exempt_roles = {AuthorRole::kSocialWorker};
  std::set<std::string> required_sections = {std::string(kAssessmentAndPlan), std::string(kSocialHistory),
                                             std::string(kHistorySubjective)};
  std::set<AuthorRole> required_section_roles = {AuthorRole::kPhysician, AuthorRole::kPhysicianAssistant,
                                                 AuthorRole::kNursePractitioner};
  std::optional<DateWindow> date_window;  // off unless supplied

  /// Throws ValidationError when min_tokens < 1 or the cap is not above it.
  void validate() const;
};

enum class RejectReason : std::uint8_t {
  kTooFewTokens = 0,
  kSectionTooLong,
  kMissingRequiredSection,
  kOutsideDateWindow,
};

std::string_view to_string(RejectReason r);

struct Rejection {
  std::string note_id;
  RejectReason reason;
  bool operator==(const Rejection&) const = default;
};

struct FilterResult {
  NoteCollection kept;             // sorted by note_id
  std::vector<Rejection> rejected;  // sorted by note_id
};

/// `sections` must hold an entry for every note id. Each rejection carries
/// the first failing rule in the order: token floor, section cap, required
/// section, date window.
FilterResult filter_notes(const NoteCollection& notes, const FilterPolicy& policy,
                          const std::map<std::string, std::vector<Section>>& sections);

/// Single-note predicate behind filter_notes; nullopt means keep.
std::optional<RejectReason> check_note(const Note& note, const FilterPolicy& policy,
                                       const std::vector<Section>& sections);

enum class Split : std::uint8_t { kTrain = 0, kDev, kTest };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct SplitRatios {
  double train = 0.6;
  double dev = 0.2;
  double test = 0.2;
};

struct SplitAssignment {
  std::map<std::string, Split> by_patient;
  SplitRatios ratios;
  std::uint64_t seed = 0;

  std::array<std::size_t, 3> counts() const;
  Split of(const std::string& patient_id) const;
};

/// Patient counts per split for n patients: floor of each share, at least
/// one patient per split with a positive ratio, remainder by largest
/// fractional share (ties to the earlier split).
std::array<std::size_t, 3> split_sizes(std::size_t n_patients, const SplitRatios& ratios);

/// Shuffles the sorted patient ids with `seed` and deals them out in
/// train/dev/test order. Throws ValidationError when ratios do not sum to 1
/// or there are fewer patients than splits.
SplitAssignment split_dataset(const NoteCollection& notes, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace sdoh

#endif  // SDOH_CORPUS_HPP_
