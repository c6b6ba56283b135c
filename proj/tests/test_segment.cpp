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

#include "fuzz_notes.hpp"
#include "helpers.hpp"
#include "sdoh/error.hpp"
#include "sdoh/segment.hpp"

using namespace sdoh;

namespace {

std::vector<std::string> texts(const std::vector<SentenceSpan>& spans) {
  std::vector<std::string> out;
  for (const auto& s : spans) out.push_back(s.text);
  return out;
}

}  // namespace

TEST_SUITE("segment") {
  TEST_CASE("header lines open named sections") {
    const std::string note = "Social History:\nPt lives alone.";
    auto sections = sectionize(note);
    REQUIRE(sections.size() == 1);
    CHECK(sections[0].name == std::string(kSocialHistory));
    CHECK(sections[0].body == "Pt lives alone.");
  }

  TEST_CASE("a note without headers is one preamble section") {
    const std::string note = "Seen today for follow up. Doing well.";
    auto sections = sectionize(note);
    REQUIRE(sections.size() == 1);
    CHECK_FALSE(sections[0].name.has_value());
    CHECK(sections[0].char_start == 0);
    CHECK(sections[0].char_end == note.size());
  }

  TEST_CASE("aliases map to canonical names in order with exact offsets") {
    const std::string note = "HPI:\nDoing well.\nAssessment and Plan:\nContinue.\n";
    auto sections = sectionize(note);
    REQUIRE(sections.size() == 2);
    CHECK(sections[0].name == std::string(kHistorySubjective));
    CHECK(sections[1].name == std::string(kAssessmentAndPlan));
    CHECK(sections[0].char_start == 5);
    CHECK(note.substr(sections[0].char_start, sections[0].char_end - sections[0].char_start) == "Doing well.\n");
    CHECK(sections[1].char_start == note.find("Continue."));
    CHECK(sections[1].char_end == note.size());
  }

  TEST_CASE("header matching is case-insensitive and needs the whole line") {
    auto sections = sectionize("SOCIAL HX\nx\nsocial history is complicated\n");
    REQUIRE(sections.size() == 1);
    CHECK(sections[0].name == std::string(kSocialHistory));
    auto lex = HeaderLexicon::load_csv(std::filesystem::path(SDOH_RESOURCE_DIR) / "header_aliases.csv");
    CHECK(lex.match_line("  Psychosocial History: ") == std::string(kSocialHistory));
    CHECK(lex.match_line("shx") == std::string(kSocialHistory));
  }

  TEST_CASE("sentence boundaries") {
    CHECK(texts(segment_sentences("Pt lives alone. She is retired.")) ==
          std::vector<std::string>{"Pt lives alone.", "She is retired."});
    CHECK(segment_sentences("Dr. Smith saw pt today.").size() == 1);
    CHECK(segment_sentences("Dose is 2.5 mg daily. Next visit soon.").size() == 2);
    CHECK(segment_sentences("Is he ok? Yes!").size() == 2);
    CHECK(segment_sentences("He said no. then left.").size() == 1);
    CHECK(segment_sentences("").empty());
    CHECK(segment_sentences(" \n\t ").empty());
  }

  TEST_CASE("bullets split and are stripped") {
    auto spans = segment_sentences("\xE2\x80\xA2 lives with wife \xE2\x80\xA2 retired teacher");
    CHECK(texts(spans) == std::vector<std::string>{"lives with wife", "retired teacher"});
    for (const auto& s : spans) CHECK(s.text.find("\xE2\x80\xA2") == std::string::npos);
    CHECK(segment_sentences("\xE2\x80\xA2 a \xE2\x80\xA2 b").size() == 2);
    CHECK(segment_sentences("\xE2\x80\xA2\xE2\x80\xA2 \xE2\x80\xA2").empty());
  }

  TEST_CASE("extra abbreviations suppress splits") {
    auto abbr = AbbreviationLexicon::defaults();
    CHECK(segment_sentences("Hx. Reviewed today.", abbr).size() == 2);
    abbr.add("hx.");
    CHECK(segment_sentences("Hx. Reviewed today.", abbr).size() == 1);
  }

  TEST_CASE("spans attach to the section containing their start") {
    const std::string note = "Intro line.\nSocial History:\nLives alone. Retired.\nPlan:\nRest.";
    auto sections = sectionize(note);
    auto spans = segment_note(note, SegmentOptions{}).sentences;
    REQUIRE(spans.size() == 4);
    CHECK_FALSE(spans[0].section_name.has_value());
    auto named = [&](std::string_view t) {
      for (const auto& s : spans)
        if (s.text.find(t) != std::string::npos) return s.section_name.value_or("");
      return std::string("?");
    };
    CHECK(named("Lives alone.") == kSocialHistory);
    CHECK(named("Rest.") == kAssessmentAndPlan);
    CHECK_THROWS_AS(attach_sections({SentenceSpan{0, 0, 999, "x", {}}}, sections, note.size()), ValidationError);
  }

  TEST_CASE("a span straddling a boundary takes the section where it starts") {
    const std::string note = "Social History:\nLives alone and\nPlan:\nrests.";
    auto sections = sectionize(note);
    std::vector<SentenceSpan> spans = {{0, note.find("Lives"), note.size(), note.substr(note.find("Lives")), {}}};
    auto out = attach_sections(spans, sections, note.size());
    CHECK(out[0].section_name == std::string(kSocialHistory));
  }

  TEST_CASE("segment_note keeps spans inside sections and offsets note-relative") {
    const std::string note = "Chief Complaint:\nFollow up.\n\nSocial History:\nLives alone. Retired.\n";
    auto seg = segment_note(note, SegmentOptions{});
    REQUIRE(seg.sentences.size() == 3);
    for (std::size_t i = 0; i < seg.sentences.size(); ++i) {
      const auto& s = seg.sentences[i];
      CHECK(s.sentence_index == i);
      CHECK(note.substr(s.char_start, s.char_end - s.char_start) == s.text);
      CHECK(s.text.find(':') == std::string::npos);
    }
    CHECK(seg.sentences[2].section_name == std::string(kSocialHistory));
  }

  TEST_CASE("fuzzed notes keep every invariant") {
    std::mt19937_64 g(12345);
    fuzz::Violations v;
    for (int i = 0; i < 300; ++i) fuzz::check_segmentation(fuzz::random_note(g), v);
    CHECK(v.reconstruction == 0);
    CHECK(v.substring == 0);
    CHECK(v.idempotence == 0);
    CHECK(v.empty_or_bullet == 0);
    CHECK(v.ordering == 0);
  }
}
