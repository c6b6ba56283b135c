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

#include "sdoh/segment.hpp"

#include <fmt/format.h>

#include "sdoh/error.hpp"
#include "sdoh/io.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

bool has_content(std::string_view s) { return !text::trim(s).empty(); }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

// Token ending at text[dot] (inclusive), delimited on the left by whitespace
// or `floor`, with leading brackets and quotes removed.
std::string_view token_before(std::string_view text, std::size_t floor, std::size_t dot) {
  std::size_t b = dot;
  while (b > floor && !text::is_space(text[b - 1])) --b;
  while (b < dot && is_opener(text[b])) ++b;
  return text.substr(b, dot + 1 - b);
}

// Appends trimmed spans for text[begin, end) to `out`.
void segment_region(std::string_view text, std::size_t begin, std::size_t end, const AbbreviationLexicon& abbreviations,
                    std::vector<SentenceSpan>& out) {
  auto emit = [&](std::size_t s, std::size_t e) {
    while (s < e && text::is_space(text[s])) ++s;
    while (e > s && text::is_space(text[e - 1])) --e;
    if (s < e) {
      SentenceSpan span;
      span.char_start = s;
      span.char_end = e;
      span.text = std::string(text.substr(s, e - s));
      out.push_back(std::move(span));
    }
  };

  std::size_t sentence_start = begin;
  std::size_t i = begin;
  while (i < end) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < end && is_terminator(text[run_end])) ++run_end;
    while (run_end < end && is_closer(text[run_end])) ++run_end;

    bool boundary = false;
    std::size_t k = run_end;
    while (k < end && text::is_space(text[k])) ++k;
    if (k == end) {
      boundary = true;
    } else if (k > run_end && text::is_upper(text[k])) {
      boundary = true;
    }
    // A run that is a single '.' closing an abbreviation is not a boundary.
    if (boundary && run_end - i >= 1 && text[i] == '.' && (i + 1 == run_end || !is_terminator(text[i + 1]))) {
      if (abbreviations.contains(token_before(text, sentence_start, i))) boundary = false;
    }
    if (boundary) {
      emit(sentence_start, run_end);
      sentence_start = run_end;
    }
    i = run_end;
  }
  emit(sentence_start, end);
}

}  // namespace

HeaderLexicon HeaderLexicon::defaults() {
  HeaderLexicon lex;
  for (auto alias : {"assessment and plan", "assessment & plan", "assessment/plan", "a/p", "a&p",
                     "impression and plan", "impression/plan", "assessment", "plan"}) {
    lex.add(alias, kAssessmentAndPlan);
  }
  for (auto alias : {"social history", "social hx", "soc hx", "shx", "social"}) lex.add(alias, kSocialHistory);
  for (auto alias : {"history/subjective", "history", "subjective", "hpi", "history of present illness",
                     "interval history"}) {
    lex.add(alias, kHistorySubjective);
  }
  for (auto alias : {"past medical history", "pmh", "medical history"}) lex.add(alias, "Past Medical History");
  for (auto alias : {"family history", "family hx", "fh"}) lex.add(alias, "Family History");
  for (auto alias : {"medications", "meds", "current medications"}) lex.add(alias, "Medications");
  lex.add("allergies", "Allergies");
  for (auto alias : {"review of systems", "ros"}) lex.add(alias, "Review of Systems");
  for (auto alias : {"physical exam", "physical examination", "exam"}) lex.add(alias, "Physical Exam");
  for (auto alias : {"chief complaint", "cc", "reason for visit"}) lex.add(alias, "Chief Complaint");
  return lex;
}

HeaderLexicon HeaderLexicon::load_csv(const std::filesystem::path& path) {
  HeaderLexicon lex = defaults();
  auto table = io::CsvTable::load(path);
  if (!table.has_column("alias") || !table.has_column("canonical")) {
    throw ValidationError(path.string() + ": header lexicon needs columns alias,canonical");
  }
  for (std::size_t r = 0; r < table.size(); ++r) {
    auto canonical = std::string(text::trim(table.get(r, "canonical")));
    if (canonical.empty()) {
      throw ValidationError(fmt::format("{}:{}: empty canonical section name", path.string(), table.line(r)));
    }
    lex.add(table.get(r, "alias"), canonical);
  }
  return lex;
}

void HeaderLexicon::add(std::string_view alias, std::string_view canonical) {
  aliases_[text::lower(text::trim(alias))] = std::string(canonical);
}

std::optional<std::string> HeaderLexicon::match_line(std::string_view line) const {
  auto t = text::trim(line);
  if (!t.empty() && t.back() == ':') t = text::trim(t.substr(0, t.size() - 1));
  if (t.empty()) return std::nullopt;
  auto it = aliases_.find(text::lower(t));
  if (it == aliases_.end()) return std::nullopt;
  return it->second;
}

AbbreviationLexicon AbbreviationLexicon::defaults() {
  AbbreviationLexicon lex;
  for (auto a : {"Dr.", "Mr.", "Mrs.", "Ms.", "Pt.", "vs.", "e.g.", "i.e.", "y.o.", "Jr.", "Sr.", "St."}) lex.add(a);
  return lex;
}

AbbreviationLexicon AbbreviationLexicon::load(const std::filesystem::path& path) {
  AbbreviationLexicon lex;
  for (const auto& line : text::split(io::read_file(path), '\n')) {
    auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') lex.add(t);
  }
  return lex;
}

void AbbreviationLexicon::add(std::string_view abbreviation) { entries_.insert(text::lower(text::trim(abbreviation))); }

bool AbbreviationLexicon::contains(std::string_view token) const { return entries_.count(text::lower(token)) > 0; }

std::vector<Section> sectionize(std::string_view note_text, const HeaderLexicon& lexicon) {
  struct Header {
    std::string name;
    std::size_t line_start;
    std::size_t body_start;
  };
  std::vector<Header> headers;
  std::size_t pos = 0;
  while (pos < note_text.size()) {
    std::size_t nl = note_text.find('\n', pos);
    std::size_t line_end = nl == std::string_view::npos ? note_text.size() : nl;
    std::size_t next = nl == std::string_view::npos ? note_text.size() : nl + 1;
    if (auto name = lexicon.match_line(note_text.substr(pos, line_end - pos))) {
      headers.push_back({*name, pos, next});
    }
    pos = next;
  }

  std::vector<Section> sections;
  std::size_t preamble_end = headers.empty() ? note_text.size() : headers.front().line_start;
  if (has_content(note_text.substr(0, preamble_end))) {
    sections.push_back({std::nullopt, 0, preamble_end, std::string(note_text.substr(0, preamble_end))});
  }
  for (std::size_t h = 0; h < headers.size(); ++h) {
    std::size_t start = headers[h].body_start;
    std::size_t end = h + 1 < headers.size() ? headers[h + 1].line_start : note_text.size();
    if (start < end) {
      sections.push_back({headers[h].name, start, end, std::string(note_text.substr(start, end - start))});
    }
  }
  return sections;
}

std::vector<SentenceSpan> segment_sentences(std::string_view text, const AbbreviationLexicon& abbreviations) {
  std::vector<SentenceSpan> spans;
  std::size_t region_start = 0;
  while (region_start <= text.size()) {
    std::size_t bullet = text.find(text::kBullet, region_start);
    std::size_t region_end = bullet == std::string_view::npos ? text.size() : bullet;
    segment_region(text, region_start, region_end, abbreviations, spans);
    if (bullet == std::string_view::npos) break;
    region_start = bullet + text::kBullet.size();
  }
  for (std::size_t i = 0; i < spans.size(); ++i) spans[i].sentence_index = i;
  return spans;
}

std::vector<SentenceSpan> attach_sections(std::vector<SentenceSpan> spans, const std::vector<Section>& sections,
                                          std::size_t note_length) {
  for (const auto& s : sections) {
    if (s.char_start >= s.char_end || s.char_end > note_length) {
      throw ValidationError(fmt::format("section [{}, {}) outside note of length {}", s.char_start, s.char_end,
                                        note_length));
    }
  }
  for (auto& span : spans) {
    if (span.char_start >= span.char_end || span.char_end > note_length) {
      throw ValidationError(fmt::format("sentence [{}, {}) outside note of length {}", span.char_start,
                                        span.char_end, note_length));
    }
    span.section_name.reset();
    for (const auto& s : sections) {
      if (span.char_start >= s.char_start && span.char_start < s.char_end) {
        span.section_name = s.name;
        break;
      }
    }
  }
  return spans;
}

NoteSegmentation segment_note(std::string_view note_text, const SegmentOptions& options) {
  NoteSegmentation out;
  out.sections = sectionize(note_text, options.headers);
  for (const auto& section : out.sections) {
    auto local = segment_sentences(section.body, options.abbreviations);
    for (auto& span : local) {
      span.char_start += section.char_start;
      span.char_end += section.char_start;
      span.section_name = section.name;
      span.sentence_index = out.sentences.size();
      out.sentences.push_back(std::move(span));
    }
  }
  return out;
}

}  // namespace sdoh
