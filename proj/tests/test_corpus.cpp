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
#include "sdoh/corpus.hpp"
#include "sdoh/error.hpp"
#include "sdoh/segment.hpp"

using namespace sdoh;

namespace {

std::string words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " w" : "w") + std::to_string(i);
  return out;
}

Note make_note(std::string id, AuthorRole role, std::string text, std::string patient = "P1") {
  Note n;
  n.note_id = std::move(id);
  n.patient_id = std::move(patient);
  n.author_role = role;
  n.date = *parse_date("2023-05-01");
  n.text = std::move(text);
  return n;
}

std::optional<RejectReason> check(const Note& n, const FilterPolicy& p = {}) {
  return check_note(n, p, sectionize(n.text));
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("jsonl loading validates records with line numbers") {
    const std::string data =
        R"({"note_id":"N1","patient_id":"P1","author_role":"physician","date":"2023-01-02","text":"x"})"
        "\n"
        R"({"note_id":"N2","patient_id":"P1","author_role":"janitor","date":"2023-01-02","text":"x"})"
        "\n"
        R"({"note_id":"N1","patient_id":"P2","author_role":"physician","date":"2023-01-02","text":"y"})"
        "\n"
        R"({"note_id":"N3","author_role":"physician","date":"2023-01-02","text":"y"})"
        "\n"
        R"({"note_id":"N4","patient_id":"P2","author_role":"Social Worker","date":"2023-13-02","text":"y"})"
        "\n";
    auto r = parse_notes(data, NoteFormat::kJsonl);
    CHECK(r.notes.size() == 1);
    REQUIRE(r.diagnostics.size() == 4);
    CHECK(r.diagnostics[0].line == 2);
    CHECK(r.diagnostics[1].line == 3);
    CHECK(r.diagnostics[2].line == 4);
    CHECK(r.diagnostics[3].line == 5);
  }

  TEST_CASE("csv loading") {
    auto r = parse_notes("note_id,patient_id,author_role,date,text\nN1,P1,nurse_practitioner,2023-02-03,\"a, b\"\n",
                         NoteFormat::kCsv);
    REQUIRE(r.notes.size() == 1);
    CHECK(r.notes[0].author_role == AuthorRole::kNursePractitioner);
    CHECK(r.notes[0].text == "a, b");
  }

  TEST_CASE("roles and dates parse leniently") {
    CHECK(parse_author_role("Physician Assistant") == AuthorRole::kPhysicianAssistant);
    CHECK(parse_author_role("social-worker") == AuthorRole::kSocialWorker);
    CHECK_FALSE(parse_author_role("surgeon").has_value());
    CHECK(parse_date("2023-02-28T10:00:00").has_value());
    CHECK_FALSE(parse_date("2023-02-30").has_value());
    CHECK(format_date(*parse_date("2024-02-29")) == "2024-02-29");
  }

  TEST_CASE("token counting") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("  a\tb\n\nc ") == 3);
  }

  TEST_CASE("token floor boundary") {
    const std::string head = "Social History:\n";  // two tokens
    CHECK(check(make_note("a", AuthorRole::kPhysician, head + words(147))) == RejectReason::kTooFewTokens);
    CHECK_FALSE(check(make_note("b", AuthorRole::kPhysician, head + words(148))).has_value());
  }

  TEST_CASE("section cap boundary and exemption") {
    const std::string body500 = "Social History:\n" + words(500);
    const std::string body501 = "Social History:\n" + words(501);
    CHECK_FALSE(check(make_note("a", AuthorRole::kPhysician, body500)).has_value());
    for (auto role : {AuthorRole::kPhysician, AuthorRole::kPhysicianAssistant, AuthorRole::kNursePractitioner,
                      AuthorRole::kRegisteredNurse}) {
      CHECK(check(make_note("b", role, body501)) == RejectReason::kSectionTooLong);
    }
    CHECK_FALSE(check(make_note("c", AuthorRole::kSocialWorker, body501)).has_value());
  }

  TEST_CASE("required sections apply to prescribers only") {
    const std::string text = "Physical Exam:\n" + words(200);
    CHECK(check(make_note("a", AuthorRole::kPhysician, text)) == RejectReason::kMissingRequiredSection);
    CHECK(check(make_note("b", AuthorRole::kNursePractitioner, text)) == RejectReason::kMissingRequiredSection);
    CHECK_FALSE(check(make_note("c", AuthorRole::kRegisteredNurse, text)).has_value());
    CHECK_FALSE(check(make_note("d", AuthorRole::kPhysician, "Assessment and Plan:\n" + words(200))).has_value());
  }

  TEST_CASE("first failing reason wins") {
    FilterPolicy p;
    DateWindow w;
    w.courses["P1"] = {*parse_date("2020-01-01"), *parse_date("2020-02-01")};
    p.date_window = w;
    auto short_note = make_note("a", AuthorRole::kPhysician, "Physical Exam:\nshort");
    CHECK(check(short_note, p) == RejectReason::kTooFewTokens);
    auto out_of_window = make_note("b", AuthorRole::kPhysician, "Social History:\n" + words(200));
    CHECK(check(out_of_window, p) == RejectReason::kOutsideDateWindow);
  }

  TEST_CASE("date window edges") {
    DateWindow w;
    w.courses["P1"] = {*parse_date("2023-03-31"), *parse_date("2023-04-30")};
    auto at = [&](const char* d) {
      auto n = make_note("x", AuthorRole::kPhysician, "");
      n.date = *parse_date(d);
      return w.contains(n);
    };
    CHECK(at("2023-03-01"));
    CHECK_FALSE(at("2023-02-28"));
    CHECK(at("2023-07-29"));
    CHECK_FALSE(at("2023-07-30"));
    auto other = make_note("y", AuthorRole::kPhysician, "", "P9");
    CHECK_FALSE(w.contains(other));
  }

  TEST_CASE("filter_notes sorts and needs sections for every note") {
    NoteCollection notes = {make_note("N2", AuthorRole::kPhysician, "Social History:\n" + words(200)),
                            make_note("N1", AuthorRole::kPhysician, "short")};
    std::map<std::string, std::vector<Section>> sections;
    for (const auto& n : notes) sections[n.note_id] = sectionize(n.text);
    auto r = filter_notes(notes, {}, sections);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].note_id == "N2");
    CHECK(r.rejected == std::vector<Rejection>{{"N1", RejectReason::kTooFewTokens}});
    sections.erase("N1");
    CHECK_THROWS_AS(filter_notes(notes, {}, sections), ValidationError);
  }

  TEST_CASE("policy validation") {
    FilterPolicy p;
    p.min_tokens = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.min_tokens = 600;
    CHECK_THROWS_AS(p.validate(), ValidationError);
  }

  TEST_CASE("split sizes") {
    CHECK(split_sizes(770, {}) == std::array<std::size_t, 3>{462, 154, 154});
    CHECK(split_sizes(10, {}) == std::array<std::size_t, 3>{6, 2, 2});
    CHECK(split_sizes(3, {}) == std::array<std::size_t, 3>{1, 1, 1});
    CHECK(split_sizes(7, {}) == std::array<std::size_t, 3>{4, 2, 1});
    CHECK_THROWS_AS(split_sizes(2, {}), ValidationError);
    CHECK_THROWS_AS(split_sizes(10, {0.5, 0.2, 0.2}), ValidationError);
  }

  TEST_CASE("patient split is deterministic and patient-disjoint") {
    NoteCollection notes;
    for (int p = 0; p < 770; ++p)
      for (int k = 0; k < 1 + p % 3; ++k)
        notes.push_back(make_note(fmt::format("N{}-{}", p, k), AuthorRole::kPhysician, "", fmt::format("P{:04}", p)));
    auto a = split_dataset(notes, {}, 42);
    auto b = split_dataset(notes, {}, 42);
    auto c = split_dataset(notes, {}, 43);
    CHECK(a.by_patient == b.by_patient);
    CHECK(a.by_patient != c.by_patient);
    CHECK(a.counts() == std::array<std::size_t, 3>{462, 154, 154});
    CHECK(a.by_patient.size() == 770);
    CHECK_THROWS_AS(a.of("nobody"), ValidationError);
  }
}
