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

// Random note-like text for segmentation property checks, plus the
// invariant checker shared by the unit tests and the acceptance run.

#ifndef SDOH_TESTS_FUZZ_NOTES_HPP_
#define SDOH_TESTS_FUZZ_NOTES_HPP_

#include <array>
#include <random>
#include <string>
#include <vector>

#include "sdoh/segment.hpp"
#include "sdoh/text.hpp"

namespace fuzz {

inline std::string random_note(std::mt19937_64& g) {
  static const std::array<const char*, 28> kPieces = {
      "Pt",     "lives",  "alone",   "Dr.",    "Smith",   "e.g.",  "i.e.",   "vs.",    "Mrs.",   "Jones",
      "is",     "retired", "3.5",    "mg",     "q.d.",    "BP",    "120/80", "(stable)", "n/a",  "Patient",
      "The",    "wife",   "y/o",     "-",      "\xE2\x80\xA2", "...", "?!",  "\"quoted\""};
  static const std::array<const char*, 8> kHeaders = {"Social History:", "Assessment and Plan", "HPI:", "plan:",
                                                      "SOCIAL HX", "Medications:", "Chief Complaint:", "Unknown:"};
  static const std::array<const char*, 7> kGlue = {" ", " ", " ", "\n", ". ", "! ", "  \t"};
  std::string out;
  const int n = 1 + static_cast<int>(g() % 120);
  for (int i = 0; i < n; ++i) {
    const auto r = g() % 100;
    if (r < 4) {
      out += "\n";
      out += kHeaders[g() % kHeaders.size()];
      out += "\n";
    } else if (r < 8) {
      out += "\n\xE2\x80\xA2 ";
    } else {
      out += kPieces[g() % kPieces.size()];
      out += kGlue[g() % kGlue.size()];
    }
  }
  return out;
}

struct Violations {
  int reconstruction = 0;
  int substring = 0;
  int idempotence = 0;
  int empty_or_bullet = 0;
  int ordering = 0;
  int total() const { return reconstruction + substring + idempotence + empty_or_bullet + ordering; }
};

inline void check_segmentation(const std::string& note, Violations& v,
                               const sdoh::AbbreviationLexicon& abbr = sdoh::AbbreviationLexicon::defaults()) {
  const auto spans = sdoh::segment_sentences(note, abbr);
  std::string joined;
  std::size_t prev_end = 0;
  for (const auto& s : spans) {
    if (!joined.empty()) joined += ' ';
    joined += s.text;
    if (s.char_end > note.size() || s.char_start >= s.char_end || note.substr(s.char_start, s.char_end - s.char_start) != s.text) {
      ++v.substring;
    }
    if (s.char_start < prev_end) ++v.ordering;
    prev_end = s.char_end;
    if (sdoh::text::trim(s.text).empty() || s.text.find(sdoh::text::kBullet) != std::string::npos) ++v.empty_or_bullet;
    const auto again = sdoh::segment_sentences(s.text, abbr);
    if (again.size() != 1 || again[0].text != s.text) ++v.idempotence;
  }
  if (sdoh::text::strip_whitespace_and_bullets(joined) != sdoh::text::strip_whitespace_and_bullets(note)) {
    ++v.reconstruction;
  }
  const auto sections = sdoh::sectionize(note);
  std::size_t last = 0;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if ((i && sections[i].char_start < last) || sections[i].char_end > note.size() ||
        sections[i].char_start > sections[i].char_end) {
      ++v.ordering;
    }
    last = sections[i].char_end;
  }
}

}  // namespace fuzz

#endif  // SDOH_TESTS_FUZZ_NOTES_HPP_
