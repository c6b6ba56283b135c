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

#include "sdoh/synthgen.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sdoh/io.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

using json = nlohmann::json;

constexpr std::string_view kSystem = "You are a physician.";
constexpr std::string_view kAck = "Ok I will remember that.";

constexpr std::string_view kInjectionInstruction =
    "\n swap the sentences patients above to one of the race/ethnicity [asian, black, white, hispanic] and "
    "gender, and put the modified race and gender in bracket at the beginning like this \n Owner operator "
    "food truck selling gourmet grilled cheese sandwiches around town => \n [Asian female] Asian woman owner "
    "operator of a food truck selling gourmet grilled cheese sandwiches around town";

std::vector<GenerationPrompt> make_prompts() {
  using C = Category;
  return {
      {C::kHousing, true, "Housing-Adverse", "Examples of housing issues for patients:",
       "patient's housing issues",
       " 1. Pt came from Assisted Living Corp. and complained about rent increase.\n"
       "2. \"Pt came from Assisted Living Corp. and complained about rent increase.\n"
       "3. He says he is worried about making his mortgage payments.\n"
       "4. Pt is staying with a friend and does not have a mailing address.\n"
       "5. Pt currently staying at Barbara McInnis shelter.\n"
       "5. Pt is staying at the Motel for the time being, while on the waitlist for the Hope Lodge."},
      {C::kTransportation, true, "Transportation-Adverse", "Examples of transportation issues for patients:",
       "patient's transportation issues",
       " 1. Pt lives 30mi away from hospital and complains about needing to transfer three times each way.\n"
       "2. Pt missed appointment because her sister couldn't drive her today.\n"
       "3. Pt is worried about making appointments because the metro is under construction this month.\n"
       "4. Pt is worried about the two hour drive.\n"
       "5. She is having trouble lying flat for treatment, she thinks it is because her back hurts after the "
       "two hour car ride into clinic.\n"
       "6. Pt felt that coming to Los Angeles was hard for them and asked to be referred to Santa Cruz.\n"
       "7. He is having trouble getting to and from the hospital."},
      {C::kRelationship, true, "Relationship-Adverse",
       "Examples of divorced, widowed, single, separated issues for patients:",
       "patients being divorced, widowed, single, or separated issues",
       " 1. Pt is meeting ex-wife at appointment.\n"
       "2. Pt is married but separated.\n"
       "3. Pt spouse passed away in October of last year.\n"
       "4. Pt is single.\n"
       "5. Pt arrived with his girlfriend, and his ex-wife will attend with him at next week's session.\n"
       "6. Pt has 3 kids from former marriage"},
      {C::kRelationship, false, "Relationship-Not adverse", "Examples of married/partnered sentences for patients:",
       "patients being married / partnered",
       " 1. Pt and her husband came into my office today.\n"
       "2. Pt and her fianc\xC3\xA9" "e came into my office today.\n"
       "3. He is here with his boyfriend.\n"
       "4. He is married to Sheila."},
      {C::kParent, true, "Parent-Adverse", "Examples of parental status for patients:",
       "patients being a parent to minors",
       " 1. Pt has 2 children ages 9 and 13.\n"
       " 2. Pt has 2 teenage children.\n"
       " 3. Pt was seen today with his daughter Angela, 3 y/o for a routine checkup."},
      {C::kEmployment, true, "Employment-Adverse", "Examples of employment issues for patients:",
       "patient's employment issues",
       " 1. Pt works part-time at Jim's Fish and is struggling to pay rent.\n"
       " 2. Pt has been living off of unemployment for the past 2 months.\n"
       " 3. Used to be a car mechanic, but he has been on disability for the past 2 years since his diagnosis.\n"
       " 4. He is currently on disability and is also occasionally working as an Uber driver to help cover the "
       "bills."},
      {C::kEmployment, false, "Employment-Not adverse", "Examples of employment sentences for patients:",
       "patient's employment",
       " 1. Pt works as an electrician in Rockland.\n"
       " 2. Pt is a 75yr old retiree.\n"
       " 3. Pt is attending Cool University full time.\n"
       " 4. Pt is a semi-retired marketing consultant."},
      {C::kSupport, true, "Social support-Adverse", "Examples of social support issues for patients:",
       "patient's lack of social support",
       " 1. Pt lives alone.\n"
       " 2. Pt is struggling to find someone to watch his cat on the days he has to come for treatment."},
      {C::kSupport, false, "Social support-Not adverse", "Examples of social support sentences for patients:",
       "patient's social support",
       " 1. Here today is Pt, her daughter, and supportive wife.\n"
       " 2. Pt is living with his parents during treatment, while his neighbors watch his cat.\n"
       " 3. Pt had to borrow money from her friend to catch the bus today.\n"
       " 4. Pt is currently living with nephew while receiving treatment."},
  };
}

std::vector<ChatMessage> assemble(const GenerationPrompt& p, const std::string& examples, int n) {
  if (n < 1) throw ValidationError("requested sentence count must be positive");
  return {
      {"system", std::string(kSystem)},
      {"user", p.intro + examples},
      {"assistant", std::string(kAck)},
      {"user", fmt::format("Imagine you are a physician. Please give me {} sentences from your clinic notes about "
                           "various {} similar to the examples.",
                           n, p.topic)},
  };
}

std::string adverse_tag(bool adverse) { return adverse ? "adverse" : "not_adverse"; }

std::string labels_string(const TaskLabels& l) {
  return fmt::format("any={};adverse={}", join_categories(l.any, "|"), join_categories(l.adverse, "|"));
}

Annotation parse_annotation_list(std::string_view s) {
  Annotation a;
  for (const auto& tok : text::split(s, '|')) {
    auto t = text::trim(tok);
    if (t.empty()) continue;
    auto [c, attr] = parse_annotation_label(t);
    a.add(c, attr);
  }
  return a;
}

}  // namespace

std::string_view to_string(Validation v) {
  switch (v) {
    case Validation::kUnreviewed: return "unreviewed";
    case Validation::kConfirmed: return "confirmed";
    case Validation::kCorrected: return "corrected";
    case Validation::kDiscarded: return "discarded";
  }
  return "unreviewed";
}

Validation parse_validation(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "unreviewed") return Validation::kUnreviewed;
  if (t == "confirmed") return Validation::kConfirmed;
  if (t == "corrected") return Validation::kCorrected;
  if (t == "discarded") return Validation::kDiscarded;
  throw ValidationError(fmt::format("unknown validation state '{}'", s));
}

TaskLabels SyntheticSentence::labels() const {
  if (corrected) return project_both(*corrected);
  TaskLabels l;
  l.any.insert(category);
  if (adverse) l.adverse.insert(category);
  return l;
}

json to_json(const SyntheticSentence& s) {
  json j = {{"id", s.id},
            {"text", s.text},
            {"category", std::string(to_string(s.category))},
            {"adverse", s.adverse},
            {"round", s.round},
            {"batch_id", s.batch_id},
            {"validated", std::string(to_string(s.validated))}};
  if (s.reference_batch) j["reference_batch"] = *s.reference_batch;
  if (s.corrected) {
    json arr = json::array();
    for (const auto& [c, a] : s.corrected->pairs()) arr.push_back(format_annotation_label(c, a));
    j["corrected_labels"] = arr;
  }
  return j;
}

SyntheticSentence synthetic_from_json(const json& j) {
  SyntheticSentence s;
  s.id = j.at("id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  auto cat = category_from_canonical(text::upper(j.at("category").get<std::string>()));
  if (!cat) throw ValidationError(fmt::format("synthetic item '{}' has unknown category", s.id));
  s.category = *cat;
  s.adverse = j.at("adverse").get<bool>();
  s.round = j.value("round", 1);
  s.batch_id = j.value("batch_id", generation_batch_id(s.round, s.category, s.adverse));
  if (j.contains("reference_batch") && !j["reference_batch"].is_null()) {
    s.reference_batch = j["reference_batch"].get<std::string>();
  }
  s.validated = parse_validation(j.value("validated", "unreviewed"));
  if (j.contains("corrected_labels") && !j["corrected_labels"].is_null()) {
    Annotation a;
    for (const auto& tok : j["corrected_labels"]) {
      auto [c, attr] = parse_annotation_label(tok.get<std::string>());
      a.add(c, attr);
    }
    s.corrected = a;
  }
  return s;
}

std::vector<SyntheticSentence> load_synthetic(const std::filesystem::path& path) {
  std::vector<SyntheticSentence> out;
  std::vector<Diagnostic> diags;
  std::set<std::string> seen;
  for (const auto& [line, obj] : io::read_jsonl(path, [&](std::size_t l, const std::string& m) {
         diags.push_back({l, m});
       })) {
    try {
      auto s = synthetic_from_json(obj);
      if (!seen.insert(s.id).second) {
        diags.push_back({line, fmt::format("duplicate id '{}'", s.id)});
        continue;
      }
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      diags.push_back({line, e.what()});
    }
  }
  if (!diags.empty()) throw ValidationError(format_diagnostics(diags, path.string()));
  return out;
}

std::string synthetic_to_jsonl(const std::vector<SyntheticSentence>& items) {
  std::vector<json> v;
  v.reserve(items.size());
  for (const auto& s : items) v.push_back(to_json(s));
  return io::to_jsonl(v);
}

// ---- generation -----------------------------------------------------------

const std::vector<GenerationPrompt>& shipped_generation_prompts() {
  static const std::vector<GenerationPrompt> prompts = make_prompts();
  return prompts;
}

const GenerationPrompt& generation_prompt_for(Category category, bool adverse) {
  for (const auto& p : shipped_generation_prompts()) {
    if (p.category == category && p.adverse == adverse) return p;
  }
  throw ValidationError(fmt::format("no generation prompt for {} ({})", to_string(category),
                                    adverse ? "adverse" : "not adverse"));
}

std::vector<ChatMessage> build_shipped_generation_prompt(Category category, bool adverse, int n) {
  const auto& p = generation_prompt_for(category, adverse);
  return assemble(p, p.shipped_examples, n);
}

std::vector<ChatMessage> build_generation_prompt(Category category, bool adverse,
                                                 const std::vector<std::string>& references, int n) {
  const auto& p = generation_prompt_for(category, adverse);
  if (references.empty()) throw ValidationError("generation prompt needs at least one reference sentence");
  std::string list;
  for (std::size_t i = 0; i < references.size(); ++i) {
    list += i ? "\n" : " ";
    list += fmt::format("{}. {}", i + 1, references[i]);
  }
  return assemble(p, list, n);
}

namespace {

std::string strip_list_marker(std::string_view raw) {
  static const std::regex kEnum(R"(^\s*(?:\(?\d+[.):]|[-*]|\xE2\x80\xA2)\s*)");
  std::string line(text::trim(raw));
  line = std::regex_replace(line, kEnum, "", std::regex_constants::format_first_only);
  return std::string(text::trim(line));
}

}  // namespace

std::vector<std::string> parse_generated_list(std::string_view response) {
  std::vector<std::string> out;
  for (const auto& raw : text::split(response, '\n')) {
    std::string line = strip_list_marker(raw);
    if (!line.empty()) out.push_back(std::move(line));
  }
  return out;
}

std::string generation_batch_id(int round, Category category, bool adverse) {
  return fmt::format("r{}-{}-{}", round, to_string(category), adverse_tag(adverse));
}

std::vector<SyntheticSentence> run_generation_round(ChatClient& client, const std::vector<GenerationJob>& jobs,
                                                    const GenerationOptions& options) {
  if (options.round != 1 && options.round != 2) throw ValidationError("generation round must be 1 or 2");
  if (options.n_per_category < 1) throw ValidationError("n_per_category must be positive");
  if (options.max_requests < 1) throw ValidationError("max_requests must be positive");
  for (const auto& job : jobs) {
    generation_prompt_for(job.category, job.adverse);
    if (options.round == 2 && (job.references.empty() || !job.reference_batch)) {
      throw ValidationError(fmt::format("round 2 job for {} needs round-1 references and their batch id",
                                        to_string(job.category)));
    }
  }

  const auto n = static_cast<std::size_t>(options.n_per_category);
  std::vector<std::vector<std::string>> collected(jobs.size());
  run_bounded(jobs.size(), client.config().max_concurrency, [&](std::size_t j) {
    const auto& job = jobs[j];
    auto& mine = collected[j];
    std::set<std::string> seen;
    for (int attempt = 0; attempt < options.max_requests && mine.size() < n; ++attempt) {
      const int want = static_cast<int>(n - mine.size());
      auto messages = job.references.empty()
                          ? build_shipped_generation_prompt(job.category, job.adverse, want)
                          : build_generation_prompt(job.category, job.adverse, job.references, want);
      ChatResult r = client.complete(messages, fmt::format("attempt-{}", attempt));
      if (!r.content) {
        throw TransportError(fmt::format("generation for {} failed: {}",
                                         generation_batch_id(options.round, job.category, job.adverse), r.error));
      }
      for (auto& s : parse_generated_list(*r.content)) {
        if (mine.size() >= n) break;
        if (seen.insert(s).second) mine.push_back(std::move(s));
      }
    }
    if (mine.size() < n) {
      spdlog::warn("{}: collected {} of {} sentences after {} requests",
                   generation_batch_id(options.round, job.category, job.adverse), mine.size(), n,
                   options.max_requests);
    }
  });

  std::vector<SyntheticSentence> out;
  std::map<Category, std::set<std::string>> per_category;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& job = jobs[j];
    const std::string batch = generation_batch_id(options.round, job.category, job.adverse);
    std::size_t index = 0;
    for (auto& s : collected[j]) {
      if (!per_category[job.category].insert(s).second) {
        spdlog::info("{}: dropped duplicate of an earlier same-category sentence", batch);
        continue;
      }
      SyntheticSentence item;
      item.id = fmt::format("{}-{:03}", batch, ++index);
      item.text = std::move(s);
      item.category = job.category;
      item.adverse = job.adverse;
      item.round = options.round;
      item.batch_id = batch;
      item.reference_batch = job.reference_batch;
      out.push_back(std::move(item));
    }
  }
  return out;
}

std::vector<GenerationJob> round_two_jobs(const std::vector<SyntheticSentence>& round_one,
                                          std::size_t max_references) {
  std::vector<GenerationJob> jobs;
  std::map<std::string, std::size_t> by_batch;
  for (const auto& s : round_one) {
    if (s.round != 1) continue;
    if (s.validated == Validation::kDiscarded) continue;
    auto [it, inserted] = by_batch.emplace(s.batch_id, jobs.size());
    if (inserted) jobs.push_back({s.category, s.adverse, {}, s.batch_id});
    auto& job = jobs[it->second];
    if (job.references.size() < max_references) job.references.push_back(s.text);
  }
  return jobs;
}

// ---- demographic injection -------------------------------------------------

std::string_view to_string(RaceEthnicity r) {
  switch (r) {
    case RaceEthnicity::kAsian: return "Asian";
    case RaceEthnicity::kBlack: return "Black";
    case RaceEthnicity::kWhite: return "White";
    case RaceEthnicity::kHispanic: return "Hispanic";
    case RaceEthnicity::kNone: return "none";
  }
  return "none";
}

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::kMale: return "male";
    case Gender::kFemale: return "female";
    case Gender::kNone: return "none";
  }
  return "none";
}

RaceEthnicity parse_race_ethnicity(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "asian") return RaceEthnicity::kAsian;
  if (t == "black") return RaceEthnicity::kBlack;
  if (t == "white") return RaceEthnicity::kWhite;
  if (t == "hispanic") return RaceEthnicity::kHispanic;
  if (t == "none" || t.empty()) return RaceEthnicity::kNone;
  throw ValidationError(fmt::format("unknown race/ethnicity '{}'", s));
}

Gender parse_gender(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "male") return Gender::kMale;
  if (t == "female") return Gender::kFemale;
  if (t == "none" || t.empty()) return Gender::kNone;
  throw ValidationError(fmt::format("unknown gender '{}'", s));
}

json to_json(const DemoPair& p) {
  return {{"pair_id", p.pair_id},
          {"original_id", p.original_id},
          {"injected_text", p.injected_text},
          {"race_ethnicity", std::string(to_string(p.descriptor.race_ethnicity))},
          {"gender", std::string(to_string(p.descriptor.gender))},
          {"validated", std::string(to_string(p.validated))}};
}

DemoPair demo_pair_from_json(const json& j) {
  DemoPair p;
  p.pair_id = j.at("pair_id").get<std::string>();
  p.original_id = j.at("original_id").get<std::string>();
  p.injected_text = j.at("injected_text").get<std::string>();
  p.descriptor.race_ethnicity = parse_race_ethnicity(j.value("race_ethnicity", "none"));
  p.descriptor.gender = parse_gender(j.value("gender", "none"));
  p.validated = parse_validation(j.value("validated", "unreviewed"));
  return p;
}

std::vector<DemoPair> load_demo_pairs(const std::filesystem::path& path) {
  std::vector<DemoPair> out;
  std::vector<Diagnostic> diags;
  std::set<std::string> seen;
  for (const auto& [line, obj] : io::read_jsonl(path, [&](std::size_t l, const std::string& m) {
         diags.push_back({l, m});
       })) {
    try {
      auto p = demo_pair_from_json(obj);
      if (!seen.insert(p.pair_id).second) {
        diags.push_back({line, fmt::format("duplicate pair_id '{}'", p.pair_id)});
        continue;
      }
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      diags.push_back({line, e.what()});
    }
  }
  if (!diags.empty()) throw ValidationError(format_diagnostics(diags, path.string()));
  return out;
}

std::string demo_pairs_to_jsonl(const std::vector<DemoPair>& pairs) {
  std::vector<json> v;
  v.reserve(pairs.size());
  for (const auto& p : pairs) v.push_back(to_json(p));
  return io::to_jsonl(v);
}

std::vector<ChatMessage> build_demo_injection_prompt(const std::vector<std::string>& originals) {
  if (originals.empty()) throw ValidationError("injection batch is empty");
  std::string content = text::join(originals, "\n");
  content += kInjectionInstruction;
  return {{"user", std::move(content)}};
}

std::vector<std::vector<std::size_t>> injection_batches(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    std::vector<std::size_t> b;
    for (std::size_t k = i; k < std::min(n, i + batch_size); ++k) b.push_back(k);
    out.push_back(std::move(b));
  }
  return out;
}

DemoLine parse_demo_output(std::string_view line) {
  const std::string stripped = strip_list_marker(line);
  std::string_view t = stripped;
  if (t.empty() || t.front() != '[') throw ValidationError(fmt::format("no leading [descriptor] tag in '{}'", line));
  auto close = t.find(']');
  if (close == std::string_view::npos) throw ValidationError(fmt::format("unterminated descriptor tag in '{}'", line));
  DemoLine out;
  for (const auto& tok : text::split(t.substr(1, close - 1), ' ')) {
    auto word = text::lower(text::trim(tok));
    if (word.empty()) continue;
    if (word == "asian" || word == "black" || word == "white" || word == "hispanic") {
      out.descriptor.race_ethnicity = parse_race_ethnicity(word);
    } else if (word == "male" || word == "female") {
      out.descriptor.gender = parse_gender(word);
    } else {
      out.warnings.push_back(fmt::format("unknown descriptor token '{}'", tok));
    }
  }
  out.injected_text = std::string(text::trim(t.substr(close + 1)));
  return out;
}

std::string render_demo_line(const Descriptor& d, std::string_view text) {
  std::vector<std::string> tags;
  if (d.race_ethnicity != RaceEthnicity::kNone) tags.emplace_back(to_string(d.race_ethnicity));
  if (d.gender != Gender::kNone) tags.emplace_back(to_string(d.gender));
  return fmt::format("[{}] {}", text::join(tags, " "), text);
}

DemoBatchResult parse_demo_batch(std::string_view response, const std::vector<const SyntheticSentence*>& originals,
                                 std::size_t first_pair_index) {
  static const std::regex kEnum(R"(^\s*\d+[.)]\s*)");
  DemoBatchResult result;
  std::vector<DemoLine> lines;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(response, '\n')) {
    ++line_no;
    std::string line = std::regex_replace(std::string(text::trim(raw)), kEnum, "", std::regex_constants::format_first_only);
    if (auto arrow = line.rfind("=>"); arrow != std::string::npos) line = line.substr(arrow + 2);
    line = std::string(text::trim(line));
    if (line.empty() || line.front() != '[') continue;
    try {
      auto parsed = parse_demo_output(line);
      for (const auto& w : parsed.warnings) result.diagnostics.push_back({line_no, w});
      lines.push_back(std::move(parsed));
    } catch (const ValidationError& e) {
      result.diagnostics.push_back({line_no, e.what()});
    }
  }
  if (lines.size() != originals.size()) {
    result.diagnostics.push_back(
        {0, fmt::format("batch starting at pair {} returned {} tagged lines for {} originals; batch rejected",
                        first_pair_index + 1, lines.size(), originals.size())});
    return result;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    DemoPair p;
    p.pair_id = fmt::format("pair-{:04}", first_pair_index + i + 1);
    p.original_id = originals[i]->id;
    p.injected_text = std::move(lines[i].injected_text);
    p.descriptor = lines[i].descriptor;
    result.pairs.push_back(std::move(p));
  }
  return result;
}

DemoBatchResult run_demo_injection(ChatClient& client, const std::vector<SyntheticSentence>& sentences,
                                   std::size_t batch_size) {
  auto batches = injection_batches(sentences.size(), batch_size);
  std::vector<DemoBatchResult> parts(batches.size());
  run_bounded(batches.size(), client.config().max_concurrency, [&](std::size_t b) {
    std::vector<const SyntheticSentence*> originals;
    std::vector<std::string> texts;
    for (std::size_t i : batches[b]) {
      originals.push_back(&sentences[i]);
      texts.push_back(sentences[i].text);
    }
    ChatResult r = client.complete(build_demo_injection_prompt(texts));
    if (!r.content) throw TransportError(fmt::format("injection batch {} failed: {}", b + 1, r.error));
    parts[b] = parse_demo_batch(*r.content, originals, batches[b].front());
  });
  DemoBatchResult out;
  for (auto& p : parts) {
    for (auto& pair : p.pairs) out.pairs.push_back(std::move(pair));
    for (auto& d : p.diagnostics) out.diagnostics.push_back(std::move(d));
  }
  return out;
}

// ---- validation ------------------------------------------------------------

std::vector<Decision> parse_decisions(std::string_view csv, const std::string& source) {
  auto table = io::CsvTable::parse(csv);
  if (table.size() > 0 && (!table.has_column("id") || !table.has_column("decision"))) {
    throw ValidationError("decisions.csv needs columns id,decision[,corrected_labels]");
  }
  std::vector<Decision> out;
  std::vector<Diagnostic> diags;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.size(); ++r) {
    Decision d;
    d.line = table.line(r);
    d.id = std::string(text::trim(table.get(r, "id")));
    try {
      if (d.id.empty()) throw ValidationError("empty id");
      d.decision = parse_validation(table.get(r, "decision"));
      if (d.decision == Validation::kUnreviewed) throw ValidationError("decision must be confirmed, corrected or discarded");
      std::string labels(text::trim(table.get(r, "corrected_labels")));
      if (d.decision == Validation::kCorrected) {
        if (labels.empty()) throw ValidationError("corrected decision without corrected_labels");
        d.corrected = parse_annotation_list(labels);
      } else if (!labels.empty()) {
        throw ValidationError("corrected_labels given for a non-corrected decision");
      }
      if (!seen.insert(d.id).second) throw ValidationError(fmt::format("second decision for '{}'", d.id));
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      diags.push_back({d.line, e.what()});
    }
  }
  if (!diags.empty()) throw ValidationError(format_diagnostics(diags, source));
  return out;
}

std::vector<Decision> load_decisions(const std::filesystem::path& path) {
  return parse_decisions(io::read_file(path), path.string());
}

namespace {

std::map<std::string, const Decision*> index_decisions(const std::vector<Decision>& decisions,
                                                       const std::set<std::string>& known) {
  std::map<std::string, const Decision*> by_id;
  std::vector<std::string> unknown;
  for (const auto& d : decisions) {
    if (!known.count(d.id)) unknown.push_back(d.id);
    by_id[d.id] = &d;
  }
  if (!unknown.empty()) {
    throw ValidationError(fmt::format("decisions reference unknown items: {}", text::join(unknown, ", ")));
  }
  return by_id;
}

void tally(ValidationSummary& s, Validation v) {
  switch (v) {
    case Validation::kConfirmed: ++s.confirmed; break;
    case Validation::kCorrected: ++s.corrected; break;
    case Validation::kDiscarded: ++s.discarded; break;
    case Validation::kUnreviewed: ++s.unreviewed; break;
  }
}

bool kept_state(Validation v) { return v == Validation::kConfirmed || v == Validation::kCorrected; }

}  // namespace

template <>
std::vector<SyntheticSentence> Validated<SyntheticSentence>::kept() const {
  std::vector<SyntheticSentence> out;
  for (const auto& s : items)
    if (kept_state(s.validated)) out.push_back(s);
  return out;
}

template <>
std::vector<DemoPair> Validated<DemoPair>::kept() const {
  std::vector<DemoPair> out;
  for (const auto& p : items)
    if (kept_state(p.validated)) out.push_back(p);
  return out;
}

Validated<SyntheticSentence> record_validation(const std::vector<SyntheticSentence>& items,
                                               const std::vector<Decision>& decisions) {
  std::set<std::string> known;
  for (const auto& s : items) known.insert(s.id);
  auto by_id = index_decisions(decisions, known);

  Validated<SyntheticSentence> out;
  out.items = items;
  for (auto& s : out.items) {
    auto it = by_id.find(s.id);
    if (it != by_id.end()) {
      const Decision& d = *it->second;
      AuditEntry a{s.id, s.validated, d.decision, labels_string(s.labels()), ""};
      s.validated = d.decision;
      if (d.corrected) s.corrected = d.corrected;
      a.labels_after = d.decision == Validation::kDiscarded ? "" : labels_string(s.labels());
      out.audit.push_back(std::move(a));
    }
    ++out.summary.generated;
    tally(out.summary, s.validated);
    if (kept_state(s.validated)) {
      auto l = s.labels();
      if (!l.any.empty()) ++out.summary.any_task;
      if (!l.adverse.empty()) ++out.summary.adverse_task;
    }
  }
  return out;
}

Validated<DemoPair> record_validation(const std::vector<DemoPair>& pairs, const std::vector<Decision>& decisions,
                                      const std::vector<SyntheticSentence>& originals) {
  std::map<std::string, const SyntheticSentence*> orig;
  for (const auto& s : originals) orig[s.id] = &s;
  std::set<std::string> known;
  for (const auto& p : pairs) known.insert(p.pair_id);
  auto by_id = index_decisions(decisions, known);

  Validated<DemoPair> out;
  out.items = pairs;
  for (auto& p : out.items) {
    auto o = orig.find(p.original_id);
    if (o == orig.end()) throw ValidationError(fmt::format("pair '{}' references unknown original '{}'", p.pair_id, p.original_id));
    const TaskLabels labels = o->second->labels();
    auto it = by_id.find(p.pair_id);
    if (it != by_id.end()) {
      const Decision& d = *it->second;
      if (d.corrected) throw ValidationError(fmt::format("pair '{}': labels follow the original sentence and cannot be corrected", p.pair_id));
      out.audit.push_back({p.pair_id, p.validated, d.decision, labels_string(labels),
                           d.decision == Validation::kDiscarded ? "" : labels_string(labels)});
      p.validated = d.decision;
    }
    ++out.summary.generated;
    tally(out.summary, p.validated);
    if (kept_state(p.validated)) {
      if (!labels.any.empty()) ++out.summary.any_task;
      if (!labels.adverse.empty()) ++out.summary.adverse_task;
    }
  }
  return out;
}

std::string audit_to_csv(const std::vector<AuditEntry>& audit) {
  io::CsvWriter w({"id", "previous", "decision", "labels_before", "labels_after"});
  for (const auto& a : audit) {
    w.row({a.id, std::string(to_string(a.previous)), std::string(to_string(a.decision)), a.labels_before,
           a.labels_after});
  }
  return w.str();
}

}  // namespace sdoh
