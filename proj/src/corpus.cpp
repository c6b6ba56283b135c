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

#include "sdoh/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "sdoh/io.hpp"
#include "sdoh/rng.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

constexpr std::array<std::string_view, 5> kRoleNames = {"physician", "physician_assistant", "nurse_practitioner",
                                                        "registered_nurse", "social_worker"};

using json = nlohmann::json;

// Field extraction shared by the JSONL and CSV readers. Returns the note or
// sets `error`.
struct RawRecord {
  std::optional<std::string> note_id, patient_id, author_role, date, text;
  std::optional<std::string> gender, race, ethnicity;
};

std::optional<Note> build_note(const RawRecord& raw, std::string& error) {
  std::vector<std::string> missing;
  if (!raw.note_id || raw.note_id->empty()) missing.emplace_back("note_id");
  if (!raw.patient_id || raw.patient_id->empty()) missing.emplace_back("patient_id");
  if (!raw.author_role) missing.emplace_back("author_role");
  if (!raw.date) missing.emplace_back("date");
  if (!raw.text) missing.emplace_back("text");
  if (!missing.empty()) {
    error = "missing required field(s): " + text::join(missing, ", ");
    return std::nullopt;
  }
  auto role = parse_author_role(*raw.author_role);
  if (!role) {
    error = fmt::format("unknown author_role '{}'", *raw.author_role);
    return std::nullopt;
  }
  auto date = parse_date(*raw.date);
  if (!date) {
    error = fmt::format("invalid date '{}'", *raw.date);
    return std::nullopt;
  }
  if (text::trim(*raw.text).empty()) {
    error = "empty text";
    return std::nullopt;
  }
  Note n{*raw.note_id, *raw.patient_id, *role, *date, *raw.text, std::nullopt};
  if (raw.gender || raw.race || raw.ethnicity) {
    n.demographics = Demographics{raw.gender.value_or(""), raw.race.value_or(""), raw.ethnicity.value_or("")};
  }
  return n;
}

std::optional<std::string> string_field(const json& obj, const char* key, std::string& error) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    error = fmt::format("field '{}' must be a string", key);
    return std::nullopt;
  }
  return it->get<std::string>();
}

void accept(LoadResult& result, std::set<std::string>& seen, std::size_t line, std::optional<Note> note,
            const std::string& error) {
  if (!note) {
    result.diagnostics.push_back({line, error});
    return;
  }
  if (!seen.insert(note->note_id).second) {
    result.diagnostics.push_back({line, fmt::format("duplicate note_id '{}'", note->note_id)});
    return;
  }
  result.notes.push_back(std::move(*note));
}

}  // namespace

std::string_view to_string(AuthorRole r) { return kRoleNames[static_cast<std::size_t>(r)]; }

std::optional<AuthorRole> parse_author_role(std::string_view s) {
  std::string norm = text::lower(text::trim(s));
  std::replace(norm.begin(), norm.end(), ' ', '_');
  std::replace(norm.begin(), norm.end(), '-', '_');
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == norm) return static_cast<AuthorRole>(i);
  }
  return std::nullopt;
}

std::optional<Date> parse_date(std::string_view s) {
  s = text::trim(s);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (s.size() > 10 && s[10] != 'T' && s[10] != ' ') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto parse = [](std::string_view part, auto& out) {
    auto r = std::from_chars(part.data(), part.data() + part.size(), out);
    return r.ec == std::errc{} && r.ptr == part.data() + part.size();
  };
  if (!parse(s.substr(0, 4), y) || !parse(s.substr(5, 2), m) || !parse(s.substr(8, 2), d)) return std::nullopt;
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(Date d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

json to_json(const Note& note) {
  json j = {{"note_id", note.note_id},
            {"patient_id", note.patient_id},
            {"author_role", std::string(to_string(note.author_role))},
            {"date", format_date(note.date)},
            {"text", note.text}};
  if (note.demographics) {
    j["demographics"] = {{"gender", note.demographics->gender},
                         {"race", note.demographics->race},
                         {"ethnicity", note.demographics->ethnicity}};
  }
  return j;
}

NoteFormat parse_note_format(std::string_view s) {
  auto f = text::lower(text::trim(s));
  if (f == "jsonl") return NoteFormat::kJsonl;
  if (f == "csv") return NoteFormat::kCsv;
  throw ValidationError(fmt::format("unknown note format '{}' (expected jsonl|csv)", s));
}

LoadResult parse_notes(std::string_view data, NoteFormat format) {
  LoadResult result;
  std::set<std::string> seen;
  if (format == NoteFormat::kJsonl) {
    auto lines = io::parse_jsonl(data, [&](std::size_t line, const std::string& msg) {
      result.diagnostics.push_back({line, msg});
    });
    for (const auto& [line, obj] : lines) {
      if (!obj.is_object()) {
        result.diagnostics.push_back({line, "record is not a JSON object"});
        continue;
      }
      std::string error;
      RawRecord raw;
      raw.note_id = string_field(obj, "note_id", error);
      raw.patient_id = string_field(obj, "patient_id", error);
      raw.author_role = string_field(obj, "author_role", error);
      raw.date = string_field(obj, "date", error);
      raw.text = string_field(obj, "text", error);
      if (auto it = obj.find("demographics"); it != obj.end() && it->is_object()) {
        raw.gender = string_field(*it, "gender", error);
        raw.race = string_field(*it, "race", error);
        raw.ethnicity = string_field(*it, "ethnicity", error);
      }
      std::optional<Note> note;
      if (error.empty()) note = build_note(raw, error);
      accept(result, seen, line, std::move(note), error);
    }
  } else {
    auto table = io::CsvTable::parse(data);
    for (std::size_t r = 0; r < table.size(); ++r) {
      auto opt = [&](const char* col) -> std::optional<std::string> {
        if (!table.has_column(col)) return std::nullopt;
        auto v = table.get(r, col);
        return v.empty() ? std::nullopt : std::optional<std::string>(v);
      };
      RawRecord raw{opt("note_id"), opt("patient_id"), opt("author_role"), opt("date"),
                    opt("text"),    opt("gender"),     opt("race"),        opt("ethnicity")};
      std::string error;
      auto note = build_note(raw, error);
      accept(result, seen, table.line(r), std::move(note), error);
    }
  }
  return result;
}

LoadResult load_notes(const std::filesystem::path& path, NoteFormat format) {
  return parse_notes(io::read_file(path), format);
}

std::size_t count_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : s) {
    bool space = text::is_space(c);
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

bool DateWindow::contains(const Note& note) const {
  auto it = courses.find(note.patient_id);
  if (it == courses.end()) return false;
  using std::chrono::days;
  using std::chrono::sys_days;
  sys_days d{note.date};
  return d >= sys_days{it->second.first_treatment} - days{days_before} &&
         d <= sys_days{it->second.last_treatment} + days{days_after};
}

void FilterPolicy::validate() const {
  if (min_tokens < 1) throw ValidationError("min_tokens must be at least 1");
  if (max_section_tokens <= min_tokens) throw ValidationError("max_section_tokens must exceed min_tokens");
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kTooFewTokens:
      return "min_tokens";
    case RejectReason::kSectionTooLong:
      return "section_cap";
    case RejectReason::kMissingRequiredSection:
      return "missing_required_section";
    case RejectReason::kOutsideDateWindow:
      return "date_window";
  }
  return "unknown";
}

std::optional<RejectReason> check_note(const Note& note, const FilterPolicy& policy,
                                       const std::vector<Section>& sections) {
  if (count_tokens(note.text) < policy.min_tokens) return RejectReason::kTooFewTokens;
  if (!policy.section_cap_exempt_roles.count(note.author_role)) {
    for (const auto& s : sections) {
      if (count_tokens(s.body) > policy.max_section_tokens) return RejectReason::kSectionTooLong;
    }
  }
  if (policy.required_section_roles.count(note.author_role)) {
    bool found = std::any_of(sections.begin(), sections.end(), [&](const Section& s) {
      return s.name && policy.required_sections.count(*s.name);
    });
    if (!found) return RejectReason::kMissingRequiredSection;
  }
  if (policy.date_window && !policy.date_window->contains(note)) return RejectReason::kOutsideDateWindow;
  return std::nullopt;
}

FilterResult filter_notes(const NoteCollection& notes, const FilterPolicy& policy,
                          const std::map<std::string, std::vector<Section>>& sections) {
  policy.validate();
  FilterResult result;
  for (const auto& note : notes) {
    auto it = sections.find(note.note_id);
    if (it == sections.end()) throw ValidationError(fmt::format("no section list for note '{}'", note.note_id));
    if (auto reason = check_note(note, policy, it->second)) {
      result.rejected.push_back({note.note_id, *reason});
    } else {
      result.kept.push_back(note);
    }
  }
  std::sort(result.kept.begin(), result.kept.end(),
            [](const Note& a, const Note& b) { return a.note_id < b.note_id; });
  std::sort(result.rejected.begin(), result.rejected.end(),
            [](const Rejection& a, const Rejection& b) { return a.note_id < b.note_id; });
  return result;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "train") return Split::kTrain;
  if (t == "dev") return Split::kDev;
  if (t == "test") return Split::kTest;
  throw ValidationError(fmt::format("unknown split '{}'", s));
}

std::array<std::size_t, 3> SplitAssignment::counts() const {
  std::array<std::size_t, 3> c{};
  for (const auto& [_, s] : by_patient) ++c[static_cast<std::size_t>(s)];
  return c;
}

Split SplitAssignment::of(const std::string& patient_id) const {
  auto it = by_patient.find(patient_id);
  if (it == by_patient.end()) throw ValidationError(fmt::format("patient '{}' has no split", patient_id));
  return it->second;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r = {ratios.train, ratios.dev, ratios.test};
  for (double x : r) {
    if (x < 0 || !std::isfinite(x)) throw ValidationError("split ratios must be finite and non-negative");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");
  const std::size_t n_splits = static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [](double x) {
    return x > 0;
  }));
  if (n < n_splits) {
    throw ValidationError(fmt::format("{} patients cannot fill {} splits", n, n_splits));
  }

  std::array<std::size_t, 3> size{};
  std::array<double, 3> frac{};
  std::size_t total = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    // 0.6 * 770 must floor to 462.
    double share = r[i] * static_cast<double>(n);
    size[i] = static_cast<std::size_t>(std::floor(share + 1e-9));
    frac[i] = share - static_cast<double>(size[i]);
    if (r[i] > 0 && size[i] == 0) size[i] = 1;
    total += size[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; total < n; k = (k + 1) % 3) {
    if (r[order[k]] > 0) {
      ++size[order[k]];
      ++total;
    }
  }
  while (total > n) {
    // Only reachable when the one-patient minimum overshoots; shrink the
    // largest split that can spare one.
    auto it = std::max_element(size.begin(), size.end());
    --*it;
    --total;
  }
  return size;
}

SplitAssignment split_dataset(const NoteCollection& notes, const SplitRatios& ratios, std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& n : notes) unique.insert(n.patient_id);
  std::vector<std::string> patients(unique.begin(), unique.end());
  auto sizes = split_sizes(patients.size(), ratios);

  Rng rng(seed);
  rng.shuffle(std::span<std::string>(patients));

  SplitAssignment out;
  out.ratios = ratios;
  out.seed = seed;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < sizes[s]; ++k) out.by_patient[patients[pos++]] = static_cast<Split>(s);
  }
  return out;
}

}  // namespace sdoh
