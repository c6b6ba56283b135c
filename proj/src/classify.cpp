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

#include "sdoh/classify.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sdoh/io.hpp"
#include "sdoh/rng.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

using json = nlohmann::json;

constexpr std::string_view kInstructions =
    "You will be provided with the following information:\n"
    "\n"
    "1. An arbitrary text sample. The sample is delimited with triple backticks.\n"
    "2. List of categories the text sample can be assigned to. The list is delimited with square brackets. "
    "The categories in the list are enclosed in the single quotes and comma separated.\n"
    "3. Examples of text samples and their assigned categories. The examples are delimited with triple "
    "backticks. The assigned categories are enclosed in a list-like structure. These examples are to be used "
    "as training data.\n"
    "\n"
    "Perform the following tasks:\n"
    "\n"
    "1. Identify to which category the provided text belongs to with the highest probability.\n"
    "2. Assign the provided text to that category.\n"
    "3. Provide your response in a JSON format containing a single key 'label' and a value corresponding to "
    "the assigned category. Do not provide any additional information except the JSON.\n"
    "\n";

constexpr std::string_view kFence = "```";

// Collapses triple backticks inside the sample.
std::string escape_fences(std::string_view s, bool& escaped) {
  std::string out(s);
  while (out.find(kFence) != std::string::npos) {
    out = text::replace_all(std::move(out), kFence, "`");
    escaped = true;
  }
  return out;
}

std::string render(const std::vector<Category>& labels, const std::vector<Exemplar>* exemplars,
                   std::string_view sentence, const PromptOptions& options, bool& escaped) {
  if (labels.empty()) throw ValidationError("prompt needs at least one category");
  if (text::trim(sentence).empty()) throw ValidationError("prompt needs a non-empty sentence");
  std::string out(kInstructions);
  out += "List of categories: ";
  out += render_label_list(labels, options);
  out += "\n\n";
  if (exemplars) {
    out += "Training data:\n";
    for (std::size_t i = 0; i < exemplars->size(); ++i) {
      const auto& ex = (*exemplars)[i];
      if (i) out += "\n\n";
      out += "Sample input: ";
      out += escape_fences(ex.text, escaped);
      out += "\n\nSample target: ";
      out += join_categories(ex.labels, ", ");
    }
    out += "\n\n";
  }
  out += "Text sample: ";
  out += kFence;
  out += escape_fences(sentence, escaped);
  out += kFence;
  out += "\n\nYour JSON response:";
  return out;
}

// End of the balanced {...} starting at `open`, skipping braces inside JSON
// strings; npos if unbalanced.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

bool parse_bool(std::string_view s, bool& ok) {
  auto t = text::lower(text::trim(s));
  ok = true;
  if (t == "true" || t == "1" || t == "yes" || t == "adverse") return true;
  if (t == "false" || t == "0" || t == "no" || t.empty()) return false;
  ok = false;
  return false;
}

}  // namespace

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::kLexicon:
      return "lexicon";
    case Backend::kRemote:
      return "remote";
    case Backend::kImported:
      return "imported";
  }
  return "unknown";
}

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::kOk:
      return "ok";
    case ParseStatus::kSalvaged:
      return "salvaged";
    case ParseStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

Backend parse_backend(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "lexicon") return Backend::kLexicon;
  if (t == "remote") return Backend::kRemote;
  if (t == "imported") return Backend::kImported;
  throw ValidationError(fmt::format("unknown backend '{}' (expected lexicon|remote|imported)", s));
}

ParseStatus parse_parse_status(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "ok") return ParseStatus::kOk;
  if (t == "salvaged") return ParseStatus::kSalvaged;
  if (t == "failed") return ParseStatus::kFailed;
  throw ValidationError(fmt::format("unknown parse_status '{}'", s));
}

json to_json(const PredictionRecord& r) {
  json labels = json::array();
  for (Category c : r.labels.members()) labels.push_back(std::string(to_string(c)));
  json j = {{"sentence_id", r.sentence_id},
            {"task", std::string(to_string(r.task))},
            {"labels", labels},
            {"model_id", r.model_id},
            {"backend", std::string(to_string(r.backend))},
            {"parse_status", std::string(to_string(r.parse_status))}};
  if (r.raw_response) j["raw_response"] = *r.raw_response;
  if (r.error) j["error"] = *r.error;
  if (r.backend == Backend::kRemote) j["retries"] = r.retries;
  return j;
}

std::string render_label_list(const std::vector<Category>& labels, const PromptOptions& options) {
  std::vector<std::string> quoted;
  for (Category c : labels) quoted.push_back(fmt::format("'{}'", to_string(c)));
  if (options.include_negative) quoted.push_back(fmt::format("'{}'", kNoSdohToken));
  return "[" + text::join(quoted, ", ") + "]";
}

Prompt build_zero_shot_prompt(const std::vector<Category>& labels, std::string_view sentence,
                              const PromptOptions& options) {
  Prompt p;
  p.text = render(labels, nullptr, sentence, options, p.escaped);
  return p;
}

Prompt build_few_shot_prompt(const std::vector<Category>& labels, const std::vector<Exemplar>& exemplars,
                             std::string_view sentence, const PromptOptions& options) {
  if (exemplars.empty()) throw ValidationError("few-shot prompt needs at least one exemplar");
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (exemplars[i].labels.empty()) throw ValidationError(fmt::format("exemplar {} has no labels", i + 1));
  }
  Prompt p;
  p.text = render(labels, &exemplars, sentence, options, p.escaped);
  return p;
}

ParsedResponse parse_model_response(std::string_view raw, const AliasTable& aliases) {
  ParsedResponse out;
  std::string_view trimmed = text::trim(raw);
  for (std::size_t open = trimmed.find('{'); open != std::string_view::npos; open = trimmed.find('{', open + 1)) {
    std::size_t close = match_brace(trimmed, open);
    if (close == std::string_view::npos) continue;
    json obj = json::parse(trimmed.substr(open, close - open), nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) continue;

    auto it = obj.find("label");
    if (it == obj.end()) return out;  // first object found has no label key

    std::vector<std::string> tokens;
    auto push_tokens = [&](const json& v) {
      if (v.is_string()) {
        // Comma-separated string: "PARENT, RELATIONSHIP".
        for (auto& t : text::split(v.get<std::string>(), ',')) {
          if (!text::trim(t).empty()) tokens.emplace_back(text::trim(t));
        }
      } else {
        tokens.push_back(v.dump());
      }
    };
    if (it->is_array()) {
      for (const auto& v : *it) push_tokens(v);
    } else {
      push_tokens(*it);
    }

    std::size_t mapped = 0;
    for (const auto& t : tokens) {
      if (text::iequals(text::trim(t), kNoSdohToken)) {
        ++mapped;
      } else if (auto c = aliases.lookup(t)) {
        out.labels.insert(*c);
        ++mapped;
      } else {
        out.unmapped_tokens.push_back(t);
      }
    }
    if (!tokens.empty() && mapped == 0) {
      out.labels = {};
      return out;
    }
    bool whole = open == 0 && close == trimmed.size();
    out.status = whole ? ParseStatus::kOk : ParseStatus::kSalvaged;
    return out;
  }
  return out;
}

LexiconRules LexiconRules::defaults() {
  using C = Category;
  LexiconRules r;
  const std::vector<LexiconRule> starter = {
      // Social support.
      {"lives alone", C::kSupport, true},
      {"lives by himself", C::kSupport, true},
      {"lives by herself", C::kSupport, true},
      {"no one to help", C::kSupport, true},
      {"no family support", C::kSupport, true},
      {"lack of support", C::kSupport, true},
      {"limited support", C::kSupport, true},
      {"socially isolated", C::kSupport, true},
      {"no one to watch", C::kSupport, true},
      {"supportive", C::kSupport, false},
      {"lives with", C::kSupport, false},
      {"caregiver", C::kSupport, false},
      {"accompanied by", C::kSupport, false},
      {"support from", C::kSupport, false},
      // Employment.
      {"retired", C::kEmployment, false},
      {"retiree", C::kEmployment, false},
      {"works as", C::kEmployment, false},
      {"working as", C::kEmployment, false},
      {"employed", C::kEmployment, false},
      {"full-time student", C::kEmployment, false},
      {"unemployed", C::kEmployment, true},
      {"unemployment", C::kEmployment, true},
      {"lost his job", C::kEmployment, true},
      {"lost her job", C::kEmployment, true},
      {"laid off", C::kEmployment, true},
      {"on disability", C::kEmployment, true},
      {"disability benefits", C::kEmployment, true},
      {"underemployed", C::kEmployment, true},
      {"unable to work", C::kEmployment, true},
      // Housing.
      {"homeless", C::kHousing, true},
      {"shelter", C::kHousing, true},
      {"evict", C::kHousing, true},
      {"mortgage", C::kHousing, true},
      {"rent increase", C::kHousing, true},
      {"afford rent", C::kHousing, true},
      {"pay rent", C::kHousing, true},
      {"couch surfing", C::kHousing, true},
      {"undomiciled", C::kHousing, true},
      {"mailing address", C::kHousing, true},
      // Transportation.
      {"transportation", C::kTransportation, true},
      {"ride to", C::kTransportation, true},
      {"rides to", C::kTransportation, true},
      {"hour drive", C::kTransportation, true},
      {"miles away", C::kTransportation, true},
      {"no car", C::kTransportation, true},
      {"the bus", C::kTransportation, true},
      {"drive her", C::kTransportation, true},
      {"drive him", C::kTransportation, true},
      // Parental status.
      {"children", C::kParent, true},
      {"kids", C::kParent, true},
      {"toddler", C::kParent, true},
      {"teenage", C::kParent, true},
      {"childcare", C::kParent, true},
      // Relationship.
      {"married", C::kRelationship, false},
      {"husband", C::kRelationship, false},
      {"wife", C::kRelationship, false},
      {"partner", C::kRelationship, false},
      {"boyfriend", C::kRelationship, false},
      {"girlfriend", C::kRelationship, false},
      {"fiance", C::kRelationship, false},
      {"widow", C::kRelationship, true},
      {"divorced", C::kRelationship, true},
      {"separated", C::kRelationship, true},
      {"is single", C::kRelationship, true},
      {"ex-wife", C::kRelationship, true},
      {"ex-husband", C::kRelationship, true},
  };
  for (const auto& rule : starter) r.add(rule);
  return r;
}

LexiconRules LexiconRules::load_csv(const std::filesystem::path& path) {
  LexiconRules r;
  auto table = io::CsvTable::load(path);
  for (const char* col : {"keyword", "category", "adverse"}) {
    if (!table.has_column(col)) throw ValidationError(path.string() + ": lexicon needs columns keyword,category,adverse");
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto cat = category_from_canonical(text::upper(text::trim(table.get(i, "category"))));
    bool ok = false;
    bool adverse = parse_bool(table.get(i, "adverse"), ok);
    if (!cat || !ok || text::trim(table.get(i, "keyword")).empty()) {
      throw ValidationError(fmt::format("{}:{}: malformed lexicon rule", path.string(), table.line(i)));
    }
    r.add({table.get(i, "keyword"), *cat, adverse});
  }
  if (r.empty()) throw ValidationError(path.string() + ": lexicon has no rules");
  return r;
}

void LexiconRules::add(LexiconRule rule) {
  rule.keyword = text::lower(text::trim(rule.keyword));
  rules_.push_back(std::move(rule));
}

TaskLabels classify_lexicon(const LexiconRules& rules, std::string_view sentence) {
  TaskLabels out;
  std::string hay = text::lower(sentence);
  for (const auto& rule : rules.rules()) {
    if (hay.find(rule.keyword) == std::string::npos) continue;
    out.any.insert(rule.category);
    if (rule.adverse) out.adverse.insert(rule.category);
  }
  return out;
}

json to_json(const TrainItem& item, Task task) {
  json labels = json::array();
  for (Category c : item.gold.members()) labels.push_back(std::string(to_string(c)));
  return {{"sentence_id", item.sentence_id},
          {"task", std::string(to_string(task))},
          {"text", item.text},
          {"labels", labels},
          {"synthetic", item.synthetic}};
}

std::vector<TrainItem> undersample_negatives(const std::vector<TrainItem>& items, double ratio, std::uint64_t seed) {
  if (!(ratio > 0)) throw ValidationError("undersampling ratio must be positive");
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].positive()) {
      ++positives;
    } else {
      negatives.push_back(i);
    }
  }
  if (positives == 0) throw ValidationError("cannot undersample: no positive sentences");
  auto target = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(positives) + 1e-9));
  Rng rng(seed);
  auto picked = rng.sample_indices(negatives.size(), std::min(target, negatives.size()));
  std::vector<bool> keep(items.size(), false);
  for (std::size_t i = 0; i < items.size(); ++i) keep[i] = items[i].positive();
  for (std::size_t k : picked) keep[negatives[k]] = true;

  std::vector<TrainItem> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (keep[i]) out.push_back(items[i]);
  }
  return out;
}

ImportResult parse_predictions(std::string_view data, const std::set<std::string>* known_ids,
                               const AliasTable& aliases) {
  ImportResult result;
  auto lines = io::parse_jsonl(data, [&](std::size_t line, const std::string& msg) {
    result.diagnostics.push_back({line, msg});
  });
  std::vector<std::string> missing;
  for (const auto& [line, obj] : lines) {
    if (!obj.is_object() || !obj.contains("sentence_id") || !obj["sentence_id"].is_string() ||
        !obj.contains("labels") || !obj["labels"].is_array()) {
      result.diagnostics.push_back({line, "prediction needs string sentence_id and array labels"});
      continue;
    }
    PredictionRecord r;
    r.sentence_id = obj["sentence_id"].get<std::string>();
    r.backend = Backend::kImported;
    r.model_id = obj.value("model_id", std::string("imported"));
    try {
      r.task = parse_task(obj.value("task", std::string("any")));
      if (obj.contains("parse_status")) r.parse_status = parse_parse_status(obj["parse_status"].get<std::string>());
    } catch (const std::exception& e) {
      result.diagnostics.push_back({line, e.what()});
      continue;
    }
    std::size_t tokens = 0;
    std::size_t mapped = 0;
    for (const auto& v : obj["labels"]) {
      ++tokens;
      std::string tok = v.is_string() ? v.get<std::string>() : v.dump();
      if (text::iequals(text::trim(tok), kNoSdohToken)) {
        ++mapped;
        continue;
      }
      try {
        r.labels.insert(parse_label_token(tok, aliases));
        ++mapped;
      } catch (const LabelParseError& e) {
        result.diagnostics.push_back({line, e.what()});
      }
    }
    if (tokens > 0 && mapped == 0) {
      r.parse_status = ParseStatus::kFailed;
      r.labels = {};
    }
    if (known_ids && !known_ids->count(r.sentence_id)) missing.push_back(r.sentence_id);
    result.records.push_back(std::move(r));
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw ValidationError(fmt::format("{} prediction id(s) not present in corpus: {}", missing.size(),
                                      text::join(missing, ", ")));
  }
  return result;
}

ImportResult import_predictions(const std::filesystem::path& path, const std::set<std::string>* known_ids,
                                const AliasTable& aliases) {
  return parse_predictions(io::read_file(path), known_ids, aliases);
}

}  // namespace sdoh
