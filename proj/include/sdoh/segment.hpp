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

// Rule-based note sectionizer and sentence segmenter.
//
// Headers are recognised only when a whole line (trimmed, case-folded, with
// an optional trailing colon) equals a lexicon alias. Sentences end at a run
// of . ! ? followed by whitespace and an upper-case letter, or by the end of
// the text; a '.' that closes a known abbreviation never ends a sentence.
// Every bullet character starts a new span and is dropped from span text.

#ifndef SDOH_SEGMENT_HPP_
#define SDOH_SEGMENT_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sdoh {

inline constexpr std::string_view kAssessmentAndPlan = "Assessment and Plan";
inline constexpr std::string_view kSocialHistory = "Social History";
inline constexpr std::string_view kHistorySubjective = "History/Subjective";

struct Section {
  std::optional<std::string> name;  // nullopt for the preamble
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string body;
};

struct SentenceSpan {
  std::size_t sentence_index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;
  std::optional<std::string> section_name;
};

class HeaderLexicon {
 public:
  /// Aliases for the three required sections plus common clinical headers.
  static HeaderLexicon defaults();
  /// CSV alias,canonical merged over the defaults.
  static HeaderLexicon load_csv(const std::filesystem::path& path);

  void add(std::string_view alias, std::string_view canonical);
  /// Canonical name when the trimmed line is a header.
  std::optional<std::string> match_line(std::string_view line) const;
  bool empty() const { return aliases_.empty(); }
  const std::map<std::string, std::string>& entries() const { return aliases_; }

 private:
  std::map<std::string, std::string> aliases_;  // lower-cased alias -> canonical
};

class AbbreviationLexicon {
 public:
  /// Dr. Mr. Mrs. Ms. Pt. vs. e.g. i.e. and a few clinical shorthands.
  static AbbreviationLexicon defaults();
  /// One abbreviation per line, including its final period.
  static AbbreviationLexicon load(const std::filesystem::path& path);

  void add(std::string_view abbreviation);
  bool contains(std::string_view token) const;

 private:
  std::set<std::string> entries_;  // lower-cased
};

std::vector<Section> sectionize(std::string_view note_text, const HeaderLexicon& lexicon = HeaderLexicon::defaults());

std::vector<SentenceSpan> segment_sentences(std::string_view text,
                                            const AbbreviationLexicon& abbreviations = AbbreviationLexicon::defaults());

/// Names each span after the named section containing its char_start.
/// Throws ValidationError when a span or section lies outside the note.
std::vector<SentenceSpan> attach_sections(std::vector<SentenceSpan> spans, const std::vector<Section>& sections,
                                          std::size_t note_length);

struct SegmentOptions {
  HeaderLexicon headers = HeaderLexicon::defaults();
  AbbreviationLexicon abbreviations = AbbreviationLexicon::defaults();
};

struct NoteSegmentation {
  std::vector<Section> sections;
  std::vector<SentenceSpan> sentences;
};

/// Sectionizes, then segments each section body separately. Spans never
/// cross a section boundary; header lines are not emitted as sentences.
/// Sentence indices run 0..n-1 across the note; offsets are note-relative.
NoteSegmentation segment_note(std::string_view note_text, const SegmentOptions& options);

}  // namespace sdoh

#endif  // SDOH_SEGMENT_HPP_
