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

#include "sdoh/cli.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sdoh/bias.hpp"
#include "sdoh/classify.hpp"
#include "sdoh/evalkit.hpp"
#include "sdoh/io.hpp"
#include "sdoh/kernels.hpp"
#include "sdoh/report.hpp"
#include "sdoh/segment.hpp"
#include "sdoh/synthgen.hpp"
#include "sdoh/text.hpp"

namespace sdoh::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using io::fmt_fixed;

// ---- flags -----------------------------------------------------------------

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  bool quiet = false;

  std::string notes;
  std::string format;
  std::string sentences;
  std::string gold;
  std::string pred;
  std::string zcodes;
  std::string synthetic;
  std::string pairs;
  std::string splits;
  std::string courses;
  std::string references;
  std::string decisions;
  std::string import_path;
  std::string exemplars;
  std::string results;
  std::string coder_b;

  std::string headers;
  std::string abbreviations;
  std::string aliases;
  std::string zcode_map;
  std::string lexicon;

  std::string task;
  std::string backend = "lexicon";
  std::string model_id;
  std::string granularity = "sentence";
  std::string split = "train";
  std::string ratios = "0.6,0.2,0.2";
  double negative_ratio = 0;
  bool with_synthetic = false;
  bool lenient = false;
  bool subset = false;
  bool include_negative = false;
  bool include_unreviewed = false;

  std::optional<std::size_t> min_tokens;
  std::optional<std::size_t> max_section_tokens;
  std::vector<std::string> exempt_roles;
  std::optional<int> days_before;
  std::optional<int> days_after;

  std::string base_url;
  std::string model;
  std::string cache;
  std::string api_key_env;
  bool offline = false;
  std::optional<int> max_concurrency;
  std::optional<int> max_retries;
  std::optional<int> timeout_ms;

  int round = 1;
  int n_per_category = 100;
  int max_requests = 5;
  std::size_t max_references = 10;
  std::size_t batch_size = kDefaultInjectionBatch;
  std::vector<std::string> models;
  std::vector<int> percents;
  bool no_gold_only = false;
  bool no_synthetic = false;
  double alpha = 0.05;
  std::size_t top = 10;
  std::vector<std::string> from;
};

struct Ctx {
  Flags f;
  RunConfig cfg;
  std::string command;
  std::map<std::string, fs::path> inputs;
  json extra = json::object();  // subcommand-specific settings for the manifest
};

// ---- input resolution ------------------------------------------------------

std::optional<fs::path> optional_input(Ctx& c, const std::string& role, const std::string& flag_value) {
  fs::path p;
  if (!flag_value.empty()) {
    p = flag_value;
  } else if (auto it = c.cfg.paths.find(role); it != c.cfg.paths.end()) {
    p = it->second;
  } else {
    return std::nullopt;
  }
  if (!fs::is_regular_file(p)) throw IoError(fmt::format("{} file not found: {}", role, p.string()));
  c.inputs[role] = p;
  return p;
}

fs::path input(Ctx& c, const std::string& role, const std::string& flag_value, std::string_view flag) {
  auto p = optional_input(c, role, flag_value);
  if (!p) throw ValidationError(fmt::format("missing {} (or paths.{} in the config)", flag, role));
  return *p;
}

std::optional<fs::path> resource(Ctx& c, const std::string& role, const std::string& flag_value) {
  fs::path p;
  if (!flag_value.empty()) {
    p = flag_value;
  } else if (auto it = c.cfg.resources.find(role); it != c.cfg.resources.end()) {
    p = it->second;
  } else {
    return std::nullopt;
  }
  if (!fs::is_regular_file(p)) throw IoError(fmt::format("{} resource not found: {}", role, p.string()));
  c.inputs["resource:" + role] = p;
  return p;
}

SegmentOptions segment_options(Ctx& c) {
  SegmentOptions o;
  if (auto p = resource(c, "headers", c.f.headers)) o.headers = HeaderLexicon::load_csv(*p);
  if (auto p = resource(c, "abbreviations", c.f.abbreviations)) {
    for (const auto& line : text::split(io::read_file(*p), '\n')) {
      auto t = text::trim(line);
      if (!t.empty() && t.front() != '#') o.abbreviations.add(t);
    }
  }
  return o;
}

AliasTable aliases(Ctx& c) {
  if (auto p = resource(c, "aliases", c.f.aliases)) return AliasTable::load_csv(*p);
  return AliasTable::defaults();
}

LexiconRules lexicon(Ctx& c) {
  if (auto p = resource(c, "lexicon", c.f.lexicon)) return LexiconRules::load_csv(*p);
  return LexiconRules::defaults();
}

ZCodeTable zcode_table(Ctx& c) {
  if (auto p = resource(c, "zcode_map", c.f.zcode_map)) return ZCodeTable::load_csv(*p);
  return ZCodeTable::defaults();
}

std::vector<Task> tasks(const Ctx& c) {
  const std::string t = c.f.task.empty() ? c.cfg.task : c.f.task;
  if (t == "both") return {Task::kAny, Task::kAdverse};
  return {parse_task(t)};
}

RemoteBackendConfig remote_config(Ctx& c) {
  RemoteBackendConfig r = c.cfg.remote;
  const auto& f = c.f;
  if (!f.base_url.empty()) r.base_url = f.base_url;
  if (!f.model.empty()) r.model_name = f.model;
  if (!f.cache.empty()) r.cache_path = fs::path(f.cache);
  if (!f.api_key_env.empty()) r.api_key_env = f.api_key_env;
  if (f.offline) r.offline = true;
  if (f.max_concurrency) r.max_concurrency = *f.max_concurrency;
  if (f.max_retries) r.max_retries = *f.max_retries;
  if (f.timeout_ms) r.timeout = std::chrono::milliseconds(*f.timeout_ms);
  r.validate();
  if (r.offline && !r.cache_path) throw ValidationError("--offline needs a response cache (--cache or remote.cache)");
  if (r.cache_path && fs::exists(*r.cache_path)) c.inputs["remote_cache"] = *r.cache_path;
  c.cfg.remote = r;
  return r;
}

void fail_on_diagnostics(const std::vector<Diagnostic>& diags, const fs::path& source) {
  if (!diags.empty()) throw ValidationError(format_diagnostics(diags, source.string()));
}

// ---- record files ----------------------------------------------------------

NoteCollection read_notes(Ctx& c, bool lenient, std::vector<Diagnostic>* kept_diags = nullptr) {
  auto path = input(c, "corpus", c.f.notes, "--notes");
  NoteFormat format = !c.f.format.empty()                 ? parse_note_format(c.f.format)
                      : path.extension() == ".csv"         ? NoteFormat::kCsv
                                                           : NoteFormat::kJsonl;
  auto loaded = load_notes(path, format);
  if (!lenient) fail_on_diagnostics(loaded.diagnostics, path);
  for (const auto& d : loaded.diagnostics) spdlog::warn("{}:{}: {}", path.string(), d.line, d.message);
  if (kept_diags) *kept_diags = loaded.diagnostics;
  return std::move(loaded.notes);
}

std::string notes_jsonl(const NoteCollection& notes) {
  std::vector<json> rows;
  rows.reserve(notes.size());
  for (const auto& n : notes) rows.push_back(to_json(n));
  return io::to_jsonl(rows);
}

struct SentenceRow {
  std::string id;
  std::string note_id;
  std::string patient_id;
  std::string text;
};

std::vector<SentenceRow> read_sentences(const fs::path& path) {
  std::vector<Diagnostic> diags;
  std::vector<SentenceRow> rows;
  std::set<std::string> seen;
  auto lines = io::read_jsonl(path, [&](std::size_t line, const std::string& msg) { diags.push_back({line, msg}); });
  for (const auto& [line, obj] : lines) {
    if (!obj.is_object() || !obj.contains("sentence_id") || !obj["sentence_id"].is_string() || !obj.contains("text") ||
        !obj["text"].is_string()) {
      diags.push_back({line, "sentence needs string sentence_id and text"});
      continue;
    }
    SentenceRow r{obj["sentence_id"].get<std::string>(), obj.value("note_id", std::string()),
                  obj.value("patient_id", std::string()), obj["text"].get<std::string>()};
    if (!seen.insert(r.id).second) {
      diags.push_back({line, fmt::format("duplicate sentence_id '{}'", r.id)});
      continue;
    }
    rows.push_back(std::move(r));
  }
  fail_on_diagnostics(diags, path);
  return rows;
}

std::map<std::string, Split> read_splits(const fs::path& path) {
  auto table = io::CsvTable::load(path);
  if (!table.has_column("patient_id") || !table.has_column("split")) {
    throw ValidationError(path.string() + ": splits need columns patient_id,split");
  }
  std::map<std::string, Split> out;
  std::vector<Diagnostic> diags;
  for (std::size_t i = 0; i < table.size(); ++i) {
    try {
      out[table.get(i, "patient_id")] = parse_split(table.get(i, "split"));
    } catch (const ValidationError& e) {
      diags.push_back({table.line(i), e.what()});
    }
  }
  fail_on_diagnostics(diags, path);
  return out;
}

std::vector<PredictionRecord> read_predictions(const fs::path& path, const AliasTable& table) {
  auto result = import_predictions(path, nullptr, table);
  fail_on_diagnostics(result.diagnostics, path);
  return std::move(result.records);
}

std::string join_set(CategorySet s) {
  std::vector<std::string> names;
  for (Category cat : s.members()) names.emplace_back(to_string(cat));
  return names.empty() ? std::string(kNoSdohToken) : text::join(names, "|");
}

/// Runs the command body inside a locked output directory and writes the
/// manifest. The body returns the exit code.
int with_output(Ctx& c, const std::function<int(report::OutputDir&)>& body) {
  fs::path out_path = c.f.out.empty() ? c.cfg.output : fs::path(c.f.out);
  report::OutputDir out(out_path);
  for (const auto& [role, path] : c.inputs) out.protect(path);
  const int code = body(out);
  json config = to_json(c.cfg);
  config["command_options"] = c.extra;
  report::write_manifest(out, {c.command, config, c.cfg.seed, c.inputs});
  return code;
}

// ---- ingest / filter / segment / split ---------------------------------------

int cmd_ingest(Ctx& c) {
  std::vector<Diagnostic> diags;
  auto notes = read_notes(c, c.f.lenient, &diags);
  std::set<std::string> patients;
  for (const auto& n : notes) patients.insert(n.patient_id);
  return with_output(c, [&](report::OutputDir& out) {
    out.write("notes.jsonl", notes_jsonl(notes));
    io::CsvWriter summary({"metric", "value"});
    summary.row({"notes", std::to_string(notes.size())});
    summary.row({"patients", std::to_string(patients.size())});
    summary.row({"skipped_records", std::to_string(diags.size())});
    out.write("ingest_summary.csv", summary.str());
    if (!diags.empty()) out.write("ingest_diagnostics.txt", format_diagnostics(diags, c.inputs["corpus"].string()));
    return kExitOk;
  });
}

std::vector<NoteSegmentation> segment_all(const NoteCollection& notes, const SegmentOptions& options) {
  std::vector<std::string_view> texts;
  texts.reserve(notes.size());
  for (const auto& n : notes) texts.emplace_back(n.text);
  return kernels::segment_notes_parallel(texts, options);
}

DateWindow read_courses(const fs::path& path, int before, int after) {
  auto table = io::CsvTable::load(path);
  for (const char* col : {"patient_id", "first_treatment", "last_treatment"}) {
    if (!table.has_column(col)) {
      throw ValidationError(path.string() + ": courses need columns patient_id,first_treatment,last_treatment");
    }
  }
  DateWindow w;
  w.days_before = before;
  w.days_after = after;
  std::vector<Diagnostic> diags;
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto first = parse_date(table.get(i, "first_treatment"));
    auto last = parse_date(table.get(i, "last_treatment"));
    if (!first || !last) {
      diags.push_back({table.line(i), "invalid treatment date"});
      continue;
    }
    w.courses[table.get(i, "patient_id")] = {*first, *last};
  }
  fail_on_diagnostics(diags, path);
  return w;
}

int cmd_filter(Ctx& c) {
  auto notes = read_notes(c, false);
  FilterPolicy policy = c.cfg.filter;
  if (c.f.min_tokens) policy.min_tokens = *c.f.min_tokens;
  if (c.f.max_section_tokens) policy.max_section_tokens = *c.f.max_section_tokens;
  if (!c.f.exempt_roles.empty()) {
    policy.section_cap_exempt_roles.clear();
    for (const auto& r : c.f.exempt_roles) {
      auto role = parse_author_role(r);
      if (!role) throw ValidationError(fmt::format("unknown author role '{}'", r));
      policy.section_cap_exempt_roles.insert(*role);
    }
  }
  c.cfg.days_before = c.f.days_before.value_or(c.cfg.days_before);
  c.cfg.days_after = c.f.days_after.value_or(c.cfg.days_after);
  if (auto courses = optional_input(c, "courses", c.f.courses)) {
    policy.date_window = read_courses(*courses, c.cfg.days_before, c.cfg.days_after);
  }
  policy.validate();
  c.cfg.filter = policy;

  auto segs = segment_all(notes, segment_options(c));
  std::map<std::string, std::vector<Section>> sections;
  for (std::size_t i = 0; i < notes.size(); ++i) sections[notes[i].note_id] = segs[i].sections;
  auto result = filter_notes(notes, policy, sections);

  std::map<std::string, const Note*> by_id;
  for (const auto& n : notes) by_id[n.note_id] = &n;
  return with_output(c, [&](report::OutputDir& out) {
    out.write("notes.jsonl", notes_jsonl(result.kept));
    io::CsvWriter rej({"note_id", "patient_id", "author_role", "reason"});
    std::map<std::string, std::size_t> counts;
    for (const auto& r : result.rejected) {
      const Note& n = *by_id.at(r.note_id);
      rej.row({r.note_id, n.patient_id, std::string(to_string(n.author_role)), std::string(to_string(r.reason))});
      ++counts[std::string(to_string(r.reason))];
    }
    out.write("rejections.csv", rej.str());
    io::CsvWriter summary({"outcome", "notes"});
    summary.row({"kept", std::to_string(result.kept.size())});
    for (auto reason : {RejectReason::kTooFewTokens, RejectReason::kSectionTooLong, RejectReason::kMissingRequiredSection,
                        RejectReason::kOutsideDateWindow}) {
      summary.row({std::string(to_string(reason)), std::to_string(counts[std::string(to_string(reason))])});
    }
    out.write("filter_summary.csv", summary.str());
    spdlog::info("filter: kept {} of {} notes", result.kept.size(), notes.size());
    return kExitOk;
  });
}

int cmd_segment(Ctx& c) {
  auto notes = read_notes(c, false);
  auto segs = segment_all(notes, segment_options(c));
  std::vector<json> rows;
  io::CsvWriter sections({"note_id", "section", "char_start", "char_end", "sentences"});
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const auto& note = notes[i];
    std::map<std::string, std::size_t> per_section;
    for (const auto& s : segs[i].sentences) {
      ++per_section[s.section_name.value_or("")];
      rows.push_back({{"sentence_id", fmt::format("{}:{}", note.note_id, s.sentence_index)},
                      {"note_id", note.note_id},
                      {"patient_id", note.patient_id},
                      {"sentence_index", s.sentence_index},
                      {"section", s.section_name ? json(*s.section_name) : json(nullptr)},
                      {"char_start", s.char_start},
                      {"char_end", s.char_end},
                      {"text", s.text}});
    }
    for (const auto& sec : segs[i].sections) {
      const std::string name = sec.name.value_or("");
      sections.row({note.note_id, name, std::to_string(sec.char_start), std::to_string(sec.char_end),
                    std::to_string(per_section[name])});
    }
  }
  return with_output(c, [&](report::OutputDir& out) {
    out.write("sentences.jsonl", io::to_jsonl(rows));
    out.write("sections.csv", sections.str());
    spdlog::info("segment: {} sentences from {} notes", rows.size(), notes.size());
    return kExitOk;
  });
}

SplitRatios parse_ratios(const std::string& s) {
  auto parts = text::split(s, ',');
  if (parts.size() != 3) throw ValidationError(fmt::format("--ratios needs three comma-separated values, got '{}'", s));
  std::array<double, 3> v{};
  for (std::size_t i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      const std::string t(text::trim(parts[i]));
      v[i] = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("--ratios: '{}' is not a number", parts[i]));
    }
  }
  return {v[0], v[1], v[2]};
}

int cmd_split(Ctx& c) {
  auto notes = read_notes(c, false);
  auto ratios = parse_ratios(c.f.ratios);
  c.extra["ratios"] = {ratios.train, ratios.dev, ratios.test};
  auto assignment = split_dataset(notes, ratios, c.cfg.seed);
  std::array<std::size_t, 3> note_counts{};
  for (const auto& n : notes) ++note_counts[static_cast<std::size_t>(assignment.of(n.patient_id))];
  return with_output(c, [&](report::OutputDir& out) {
    io::CsvWriter w({"patient_id", "split"});
    for (const auto& [patient, split] : assignment.by_patient) w.row({patient, std::string(to_string(split))});
    out.write("splits.csv", w.str());
    io::CsvWriter s({"split", "patients", "notes"});
    const auto counts = assignment.counts();
    for (auto split : {Split::kTrain, Split::kDev, Split::kTest}) {
      const auto i = static_cast<std::size_t>(split);
      s.row({std::string(to_string(split)), std::to_string(counts[i]), std::to_string(note_counts[i])});
    }
    out.write("split_summary.csv", s.str());
    return kExitOk;
  });
}

// ---- training exports ------------------------------------------------------

std::vector<TrainItem> gold_items(Ctx& c, Task task) {
  auto sentences = read_sentences(input(c, "sentences", c.f.sentences, "--sentences"));
  auto gold = load_gold(input(c, "annotations", c.f.gold, "--gold"));
  std::optional<std::map<std::string, Split>> splits;
  std::optional<Split> wanted;
  if (auto p = optional_input(c, "splits", c.f.splits)) {
    splits = read_splits(*p);
    wanted = parse_split(c.f.split);
    c.extra["split"] = c.f.split;
  }
  std::vector<TrainItem> items;
  std::vector<std::string> missing;
  for (const auto& s : sentences) {
    if (splits) {
      auto it = splits->find(s.patient_id);
      if (it == splits->end()) {
        throw ValidationError(fmt::format("sentence {} belongs to patient '{}' with no split", s.id, s.patient_id));
      }
      if (it->second != *wanted) continue;
    }
    auto g = gold.find(s.id);
    if (g == gold.end()) {
      missing.push_back(s.id);
      continue;
    }
    items.push_back({s.id, s.text, g->second.for_task(task), false});
  }
  if (!missing.empty()) {
    const std::size_t shown = std::min<std::size_t>(missing.size(), 5);
    throw ValidationError(fmt::format("{} sentence(s) lack gold labels, e.g. {}", missing.size(),
                                      text::join(std::vector<std::string>(missing.begin(), missing.begin() + static_cast<long>(shown)), ", ")));
  }
  return items;
}

std::vector<TrainItem> synthetic_pool(Ctx& c, Task task) {
  std::vector<TrainItem> pool;
  auto p = optional_input(c, "synthetic", c.f.synthetic);
  if (!p) return pool;
  for (const auto& s : load_synthetic(*p)) {
    if (s.validated != Validation::kConfirmed && s.validated != Validation::kCorrected) continue;
    CategorySet labels = s.labels().for_task(task);
    if (labels.empty()) continue;
    pool.push_back({s.id, s.text, labels, true});
  }
  return pool;
}

std::string items_jsonl(const std::vector<TrainItem>& items, Task task) {
  std::vector<json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) rows.push_back(to_json(item, task));
  return io::to_jsonl(rows);
}

int cmd_export_train(Ctx& c) {
  if (c.f.negative_ratio <= 0) c.f.negative_ratio = 1.0;
  c.extra["negative_ratio"] = c.f.negative_ratio;
  c.extra["with_synthetic"] = c.f.with_synthetic;
  struct Export {
    Task task;
    std::vector<TrainItem> items;
    std::size_t positives, negatives_available, negatives_kept, synthetic;
  };
  std::vector<Export> exports;
  for (Task task : tasks(c)) {
    auto items = gold_items(c, task);
    std::size_t positives = 0;
    for (const auto& i : items) positives += i.positive() ? 1 : 0;
    auto kept = undersample_negatives(items, c.f.negative_ratio, c.cfg.seed);
    std::size_t synth = 0;
    if (c.f.with_synthetic) {
      auto pool = synthetic_pool(c, task);
      if (pool.empty()) throw ValidationError("--with-synthetic needs validated synthetic sentences (--synthetic)");
      synth = pool.size();
      kept.insert(kept.end(), pool.begin(), pool.end());
    }
    exports.push_back({task, std::move(kept), positives, items.size() - positives, 0, synth});
    exports.back().negatives_kept = exports.back().items.size() - positives - synth;
  }
  return with_output(c, [&](report::OutputDir& out) {
    io::CsvWriter summary({"task", "positives", "negatives_available", "negatives_kept", "synthetic", "total"});
    for (const auto& e : exports) {
      out.write(fmt::format("train_{}.jsonl", to_string(e.task)), items_jsonl(e.items, e.task));
      summary.row({std::string(to_string(e.task)), std::to_string(e.positives), std::to_string(e.negatives_available),
                   std::to_string(e.negatives_kept), std::to_string(e.synthetic), std::to_string(e.items.size())});
    }
    out.write("export_summary.csv", summary.str());
    return kExitOk;
  });
}

std::vector<AblationRow> read_ablation_results(const fs::path& path, Task task) {
  auto table = io::CsvTable::load(path);
  for (const char* col : {"percent_removed", "variant"}) {
    if (!table.has_column(col)) throw ValidationError(path.string() + ": results need percent_removed and variant columns");
  }
  std::vector<AblationRow> rows;
  std::vector<Diagnostic> diags;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.has_column("task") && !table.get(i, "task").empty() && table.get(i, "task") != to_string(task)) continue;
    AblationRow r;
    try {
      r.percent = std::stoi(table.get(i, "percent_removed"));
      const auto variant = table.get(i, "variant");
      if (variant != "gold_only" && variant != "gold+synthetic") {
        throw ValidationError(fmt::format("variant must be gold_only or gold+synthetic, got '{}'", variant));
      }
      r.with_synthetic = variant == "gold+synthetic";
      std::map<std::string, double> f1;
      for (const auto& l : report_label_order()) {
        const auto cell = table.get(i, text::lower(l.name()));
        if (!cell.empty()) f1[l.name()] = std::stod(cell);
      }
      if (!f1.empty()) r.f1 = f1;
      if (!table.get(i, "macro_f1").empty()) r.macro_f1 = std::stod(table.get(i, "macro_f1"));
    } catch (const ValidationError& e) {
      diags.push_back({table.line(i), e.what()});
      continue;
    } catch (const std::exception&) {
      diags.push_back({table.line(i), "non-numeric percent or score"});
      continue;
    }
    rows.push_back(std::move(r));
  }
  fail_on_diagnostics(diags, path);
  return rows;
}

int cmd_ablate(Ctx& c) {
  AblationOptions options;
  if (!c.f.percents.empty()) options.percents = c.f.percents;
  options.gold_only = !c.f.no_gold_only;
  options.with_synthetic = !c.f.no_synthetic;
  options.seed = c.cfg.seed;
  c.extra["percents"] = options.percents;
  c.extra["gold_only"] = options.gold_only;
  c.extra["with_synthetic"] = options.with_synthetic;
  c.extra["negative_ratio"] = c.f.negative_ratio;

  struct Plan {
    Task task;
    AblationPlan plan;
  };
  std::vector<Plan> plans;
  for (Task task : tasks(c)) {
    auto items = gold_items(c, task);
    if (c.f.negative_ratio > 0) items = undersample_negatives(items, c.f.negative_ratio, c.cfg.seed);
    auto pool = options.with_synthetic ? synthetic_pool(c, task) : std::vector<TrainItem>{};
    auto plan = ablation_schedule(items, pool, options);
    if (auto results = optional_input(c, "results", c.f.results)) {
      for (const auto& filled : read_ablation_results(*results, task)) {
        for (auto& row : plan.report) {
          if (row.percent == filled.percent && row.with_synthetic == filled.with_synthetic) {
            if (filled.f1) row.f1 = filled.f1;
            if (filled.macro_f1) {
              row.macro_f1 = filled.macro_f1;
            } else if (filled.f1 && filled.f1->size() == 7) {
              std::vector<double> v;
              for (const auto& [k, f] : *filled.f1) v.push_back(f);
              row.macro_f1 = macro_f1(std::span<const double>(v));
            }
          }
        }
      }
    }
    plans.push_back({task, std::move(plan)});
  }
  return with_output(c, [&](report::OutputDir& out) {
    io::CsvWriter exports({"task", "percent_removed", "variant", "items", "gold_positives", "gold_negatives", "synthetic", "file"});
    std::string csv;
    std::string md = "# Ablation\n\n";
    for (const auto& p : plans) {
      for (const auto& e : p.plan.exports) {
        const std::string variant = e.with_synthetic ? "gold+synthetic" : "gold_only";
        const std::string file = fmt::format("ablation/{}-{}-p{:03d}.jsonl", to_string(p.task),
                                             e.with_synthetic ? "gold_synthetic" : "gold_only", e.percent);
        out.write(file, items_jsonl(e.items, p.task));
        exports.row({std::string(to_string(p.task)), std::to_string(e.percent), variant, std::to_string(e.items.size()),
                     std::to_string(e.gold_positives), std::to_string(e.gold_negatives), std::to_string(e.synthetic), file});
      }
      auto part = report::ablation_csv(p.task, p.plan.report);
      csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
      md += report::ablation_markdown(p.task, p.plan.report);
    }
    out.write("ablation_exports.csv", exports.str());
    out.write("ablation.csv", csv.empty() ? report::ablation_csv(Task::kAny, {}) : csv);
    out.write("ablation.md", md);
    return kExitOk;
  });
}

// ---- classification ----------------------------------------------------------

std::vector<SentenceInput> classification_inputs(Ctx& c) {
  std::vector<SentenceInput> inputs;
  if (!c.f.sentences.empty() || c.cfg.paths.count("sentences")) {
    for (auto& s : read_sentences(input(c, "sentences", c.f.sentences, "--sentences"))) {
      inputs.push_back({std::move(s.id), std::move(s.text)});
    }
    return inputs;
  }
  if (auto p = optional_input(c, "synthetic", c.f.synthetic)) {
    for (const auto& s : load_synthetic(*p)) {
      if (s.validated == Validation::kDiscarded) continue;
      inputs.push_back({s.id, s.text});
    }
    return inputs;
  }
  throw ValidationError("classify needs --sentences or --synthetic");
}

std::vector<Exemplar> read_exemplars(const fs::path& path, const AliasTable& table) {
  std::vector<Exemplar> out;
  std::vector<Diagnostic> diags;
  for (const auto& [line, obj] : io::read_jsonl(path)) {
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("labels") || !obj["labels"].is_array()) {
      diags.push_back({line, "exemplar needs text and labels"});
      continue;
    }
    Exemplar e{obj["text"].get<std::string>(), {}};
    try {
      for (const auto& l : obj["labels"]) e.labels.insert(parse_label_token(l.get<std::string>(), table));
    } catch (const std::exception& ex) {
      diags.push_back({line, ex.what()});
      continue;
    }
    out.push_back(std::move(e));
  }
  fail_on_diagnostics(diags, path);
  return out;
}

int cmd_classify(Ctx& c) {
  const auto backend = parse_backend(c.f.backend);
  auto inputs = classification_inputs(c);
  auto table = aliases(c);
  c.extra["backend"] = c.f.backend;
  std::vector<PredictionRecord> records;
  int code = kExitOk;

  if (backend == Backend::kLexicon) {
    auto rules = lexicon(c);
    const std::string model_id = c.f.model_id.empty() ? "lexicon" : c.f.model_id;
    std::vector<std::string> texts;
    texts.reserve(inputs.size());
    for (const auto& s : inputs) texts.push_back(s.text);
    auto labels = kernels::classify_lexicon_parallel(rules, texts);
    for (Task task : tasks(c)) {
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        PredictionRecord r;
        r.sentence_id = inputs[i].id;
        r.task = task;
        r.labels = labels[i].for_task(task);
        r.model_id = model_id;
        r.backend = Backend::kLexicon;
        records.push_back(std::move(r));
      }
    }
  } else if (backend == Backend::kRemote) {
    ChatClient client(remote_config(c));
    RemoteClassifyOptions options;
    options.aliases = table;
    options.prompt.include_negative = c.f.include_negative;
    if (auto p = optional_input(c, "exemplars", c.f.exemplars)) options.exemplars = read_exemplars(*p, table);
    c.extra["few_shot_exemplars"] = options.exemplars.size();
    c.extra["include_negative"] = c.f.include_negative;
    const std::string model_id = c.f.model_id.empty() ? client.config().model_name : c.f.model_id;
    for (Task task : tasks(c)) {
      options.task = task;
      auto recs = classify_remote(client, inputs, options);
      for (auto& r : recs) {
        r.model_id = model_id;
        if (r.error) code = kExitTransport;
      }
      records.insert(records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
  } else {
    std::set<std::string> known;
    for (const auto& s : inputs) known.insert(s.id);
    auto path = input(c, "predictions", c.f.import_path, "--import");
    auto result = import_predictions(path, &known, table);
    fail_on_diagnostics(result.diagnostics, path);
    const auto wanted = tasks(c);
    for (auto& r : result.records) {
      if (std::find(wanted.begin(), wanted.end(), r.task) == wanted.end()) continue;
      if (!c.f.model_id.empty()) r.model_id = c.f.model_id;
      records.push_back(std::move(r));
    }
  }

  std::map<std::pair<std::string, std::string>, std::array<std::size_t, 4>> summary;
  std::vector<json> rows;
  for (const auto& r : records) {
    auto& s = summary[{std::string(to_string(r.task)), r.model_id}];
    ++s[0];
    ++s[1 + static_cast<std::size_t>(r.parse_status)];
    rows.push_back(to_json(r));
  }
  return with_output(c, [&](report::OutputDir& out) {
    out.write("predictions.jsonl", io::to_jsonl(rows));
    io::CsvWriter w({"task", "model_id", "sentences", "ok", "salvaged", "failed"});
    for (const auto& [key, s] : summary) {
      w.row({key.first, key.second, std::to_string(s[0]), std::to_string(s[1]), std::to_string(s[2]), std::to_string(s[3])});
    }
    out.write("classify_summary.csv", w.str());
    if (code == kExitTransport) spdlog::error("classify: some requests failed at the backend; see the error field");
    return code;
  });
}

// ---- synthetic data --------------------------------------------------------

std::string validation_summary_csv(const ValidationSummary& s) {
  io::CsvWriter w({"metric", "value"});
  w.row({"generated", std::to_string(s.generated)});
  w.row({"confirmed", std::to_string(s.confirmed)});
  w.row({"corrected", std::to_string(s.corrected)});
  w.row({"discarded", std::to_string(s.discarded)});
  w.row({"unreviewed", std::to_string(s.unreviewed)});
  w.row({"any_task_sentences", std::to_string(s.any_task)});
  w.row({"adverse_task_sentences", std::to_string(s.adverse_task)});
  return w.str();
}

int cmd_generate(Ctx& c) {
  if (!c.f.decisions.empty()) {
    auto items = load_synthetic(input(c, "synthetic", c.f.synthetic, "--synthetic"));
    auto decisions = load_decisions(input(c, "decisions", c.f.decisions, "--apply-decisions"));
      auto v = record_validation(items, decisions);
    return with_output(c, [&](report::OutputDir& out) {
      out.write("synthetic.jsonl", synthetic_to_jsonl(v.items));
      out.write("audit.csv", audit_to_csv(v.audit));
      out.write("validation_summary.csv", validation_summary_csv(v.summary));
      return kExitOk;
    });
  }
  if (c.f.round != 1 && c.f.round != 2) throw ValidationError("--round must be 1 or 2");
  GenerationOptions options;
  options.round = c.f.round;
  options.n_per_category = c.f.n_per_category;
  options.max_requests = c.f.max_requests;
  if (options.n_per_category < 1 || options.max_requests < 1) {
    throw ValidationError("--n-per-category and --max-requests must be positive");
  }
  c.extra["round"] = options.round;
  c.extra["n_per_category"] = options.n_per_category;
  c.extra["max_requests"] = options.max_requests;

  std::vector<GenerationJob> jobs;
  if (options.round == 1) {
    for (const auto& p : shipped_generation_prompts()) jobs.push_back({p.category, p.adverse, {}, std::nullopt});
  } else {
    auto refs = load_synthetic(input(c, "references", c.f.references, "--references"));
    std::vector<SyntheticSentence> usable;
    for (auto& s : refs)
      if (s.validated != Validation::kDiscarded) usable.push_back(std::move(s));
    jobs = round_two_jobs(usable, c.f.max_references);
    c.extra["max_references"] = c.f.max_references;
  }
  ChatClient client(remote_config(c));
  auto generated = run_generation_round(client, jobs, options);
  std::map<std::string, std::size_t> per_batch;
  for (const auto& s : generated) ++per_batch[s.batch_id];
  return with_output(c, [&](report::OutputDir& out) {
    out.write("synthetic.jsonl", synthetic_to_jsonl(generated));
    io::CsvWriter w({"batch_id", "category", "adverse", "requested", "generated"});
    for (const auto& job : jobs) {
      const auto id = generation_batch_id(options.round, job.category, job.adverse);
      w.row({id, std::string(to_string(job.category)), job.adverse ? "true" : "false",
             std::to_string(options.n_per_category), std::to_string(per_batch[id])});
    }
    out.write("generation_summary.csv", w.str());
    return kExitOk;
  });
}

int cmd_inject(Ctx& c) {
  auto originals = load_synthetic(input(c, "synthetic", c.f.synthetic, "--synthetic"));
  if (!c.f.decisions.empty()) {
    auto pairs = load_demo_pairs(input(c, "pairs", c.f.pairs, "--pairs"));
    auto decisions = load_decisions(input(c, "decisions", c.f.decisions, "--apply-decisions"));
      auto v = record_validation(pairs, decisions, originals);
    return with_output(c, [&](report::OutputDir& out) {
      out.write("demo_pairs.jsonl", demo_pairs_to_jsonl(v.items));
      out.write("audit.csv", audit_to_csv(v.audit));
      out.write("validation_summary.csv", validation_summary_csv(v.summary));
      return kExitOk;
    });
  }
  std::vector<SyntheticSentence> chosen;
  for (const auto& s : originals) {
    const bool reviewed = s.validated == Validation::kConfirmed || s.validated == Validation::kCorrected;
    if (reviewed || (c.f.include_unreviewed && s.validated == Validation::kUnreviewed)) chosen.push_back(s);
  }
  if (chosen.empty()) throw ValidationError("no validated synthetic sentences to inject (see --include-unreviewed)");
  if (c.f.batch_size < 1) throw ValidationError("--batch-size must be positive");
  c.extra["batch_size"] = c.f.batch_size;
  c.extra["include_unreviewed"] = c.f.include_unreviewed;
  ChatClient client(remote_config(c));
  auto result = run_demo_injection(client, chosen, c.f.batch_size);
  return with_output(c, [&](report::OutputDir& out) {
    out.write("demo_pairs.jsonl", demo_pairs_to_jsonl(result.pairs));
    if (!result.diagnostics.empty()) {
      out.write("injection_diagnostics.txt", format_diagnostics(result.diagnostics, "injection"));
      spdlog::warn("inject-demographics: {} batch diagnostics", result.diagnostics.size());
    }
    return kExitOk;
  });
}

// ---- evaluation ------------------------------------------------------------

struct ModelPreds {
  std::string model;
  std::vector<PredictionRecord> records;
};

std::vector<ModelPreds> group_by_model(std::vector<PredictionRecord> records) {
  std::vector<ModelPreds> out;
  for (auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ModelPreds& m) { return m.model == r.model_id; });
    if (it == out.end()) {
      out.push_back({r.model_id, {}});
      it = out.end() - 1;
    }
    it->records.push_back(std::move(r));
  }
  return out;
}

LabelMap restrict_to(const LabelMap& gold, const LabelMap& pred) {
  LabelMap out;
  for (const auto& [id, labels] : pred) {
    auto it = gold.find(id);
    if (it == gold.end()) throw ValidationError(fmt::format("prediction for '{}' has no gold label", id));
    out.emplace(id, it->second);
  }
  return out;
}

int cmd_evaluate(Ctx& c) {
  auto table = aliases(c);
  auto gold = load_gold(input(c, "annotations", c.f.gold, "--gold"));
  auto preds = group_by_model(read_predictions(input(c, "predictions", c.f.pred, "--pred"), table));
  const bool patient = c.f.granularity == "patient";
  if (!patient && c.f.granularity != "sentence") throw ValidationError("--granularity must be sentence or patient");
  std::optional<NoteCollection> notes;
  if (patient) notes = read_notes(c, false);
  c.extra["granularity"] = c.f.granularity;
  c.extra["subset"] = c.f.subset;

  std::optional<std::map<std::string, TaskLabels>> coder_b;
  if (auto p = optional_input(c, "coder_b", c.f.coder_b)) coder_b = load_gold(*p);

  std::vector<report::ModelEval> evals;
  std::vector<report::ModelDiscrepancies> discrepancies;
  std::optional<AgreementReport> agreement_report;
  for (Task task : tasks(c)) {
    LabelMap g = project_gold(gold, task);
    for (const auto& m : preds) {
      LabelMap p = prediction_map(m.records, task);
      if (p.empty()) continue;
      LabelMap gm = c.f.subset ? restrict_to(g, p) : g;
      if (patient) {
        gm = patient_aggregate(gm, *notes);
        p = patient_aggregate(p, *notes);
      }
      check_aligned(gm, p);
      evals.push_back({m.model, task, evaluate(gm, p, patient ? Granularity::kPatient : Granularity::kSentence)});
      discrepancies.push_back({m.model, task, discrepancy_table(gm, p)});
    }
    if (coder_b && !agreement_report) {
      agreement_report = agreement(g, project_gold(*coder_b, task));
    }
  }
  if (evals.empty()) spdlog::warn("evaluate: no predictions for the selected task(s)");
  return with_output(c, [&](report::OutputDir& out) {
    out.write("metrics.csv", report::metrics_csv(evals));
    out.write("confusion.csv", report::confusion_csv(evals));
    out.write("discrepancies.csv", report::discrepancies_csv(discrepancies));
    out.write("metrics.md", "# Classification performance\n\n" + report::metrics_markdown(evals));
    out.write("discrepancies.md", report::discrepancies_markdown(discrepancies, c.f.top));
    if (agreement_report) out.write("agreement.csv", report::agreement_csv(*agreement_report));
    return kExitOk;
  });
}

// ---- patient level ---------------------------------------------------------

int cmd_patient_eval(Ctx& c) {
  auto table = aliases(c);
  auto zmap = zcode_table(c);
  auto notes = read_notes(c, false);
  auto gold = project_gold(load_gold(input(c, "annotations", c.f.gold, "--gold")), Task::kAdverse);
  auto records = read_predictions(input(c, "predictions", c.f.pred, "--pred"), table);
  auto zcodes = load_zcodes(input(c, "zcodes", c.f.zcodes, "--zcodes"));
  auto models = group_by_model(std::move(records));
  if (!c.f.model_id.empty()) {
    std::erase_if(models, [&](const ModelPreds& m) { return m.model != c.f.model_id; });
  }
  if (models.size() != 1) {
    throw ValidationError(fmt::format("patient-eval needs predictions from exactly one model (found {}); use --model-id",
                                      models.size()));
  }
  LabelMap sentence_preds = prediction_map(models[0].records, Task::kAdverse);
  if (sentence_preds.empty()) throw ValidationError("patient-eval needs adverse-task predictions");
  if (c.f.subset) gold = restrict_to(gold, sentence_preds);
  auto gold_p = patient_aggregate(gold, notes);
  auto model_p = patient_aggregate(sentence_preds, notes);
  auto cmp = compare_zcodes(gold_p, model_p, zcodes, zmap);
  c.extra["model_id"] = models[0].model;

  return with_output(c, [&](report::OutputDir& out) {
    io::CsvWriter m({"source", "label", "tp", "fp", "fn", "tn", "precision", "recall", "f1"});
    auto emit = [&](const std::string& source, const ConfusionCounts& k) {
      const auto mt = metrics(k);
      m.row({source, k.label.name(), std::to_string(k.tp), std::to_string(k.fp), std::to_string(k.fn),
             std::to_string(k.tn), fmt_fixed(mt.precision), fmt_fixed(mt.recall), fmt_fixed(mt.f1)});
    };
    for (const auto& lr : cmp.model_vs_gold.labels) emit("model", lr.counts);
    emit("model", cmp.model_any);
    for (const auto& lr : cmp.zcode_vs_gold.labels) emit("zcode", lr.counts);
    emit("zcode", cmp.zcode_any);
    out.write("patient_metrics.csv", m.str());

    io::CsvWriter labels({"patient_id", "gold", "model", "zcode"});
    for (const auto& [patient, g] : gold_p) {
      auto z = cmp.zcode_labels.find(patient);
      labels.row({patient, join_set(g), join_set(model_p.at(patient)),
                  join_set(z == cmp.zcode_labels.end() ? CategorySet{} : z->second)});
    }
    out.write("patient_labels.csv", labels.str());

    std::string md = "# Patient-level adverse SDoH\n\n";
    md += "| Source | Label | TP | FP | FN | TN | Recall | F1 |\n| --- | --- | --- | --- | --- | --- | --- | --- |\n";
    for (const auto& [source, k] : {std::pair<std::string, ConfusionCounts>{"Model", cmp.model_any},
                                    std::pair<std::string, ConfusionCounts>{"Z-codes", cmp.zcode_any}}) {
      const auto mt = metrics(k);
      md += fmt::format("| {} | Any SDoH | {} | {} | {} | {} | {} | {} |\n", source, k.tp, k.fp, k.fn, k.tn,
                        fmt_fixed(mt.recall, 3), fmt_fixed(mt.f1, 3));
    }
    out.write("patient.md", md);
    out.write("patient_f1.svg", report::patient_chart(cmp));
    std::string warnings;
    for (const auto& w : cmp.warnings) warnings += w + "\n";
    out.write("zcode_warnings.txt", warnings);
    return kExitOk;
  });
}

// ---- bias ------------------------------------------------------------------

struct ModelSpec {
  std::string name;
  std::string kind;  // lexicon | remote | imported
  fs::path path;
};

ModelSpec parse_model_spec(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError(fmt::format("--model-spec '{}' must be NAME=BACKEND", s));
  ModelSpec m{s.substr(0, eq), s.substr(eq + 1), {}};
  if (m.kind.rfind("imported:", 0) == 0) {
    m.path = m.kind.substr(9);
    m.kind = "imported";
  }
  if (m.kind != "lexicon" && m.kind != "remote" && m.kind != "imported") {
    throw ValidationError(fmt::format("--model-spec backend must be lexicon, remote or imported:PATH, got '{}'", m.kind));
  }
  return m;
}

int cmd_bias_eval(Ctx& c) {
  auto originals = load_synthetic(input(c, "synthetic", c.f.synthetic, "--synthetic"));
  auto pairs = load_demo_pairs(input(c, "pairs", c.f.pairs, "--pairs"));
  if (c.f.models.empty()) c.f.models = {"lexicon=lexicon"};
  if (c.f.models.size() > 2) throw ValidationError("bias-eval compares at most two models");
  if (c.f.alpha <= 0 || c.f.alpha >= 1) throw ValidationError("--alpha must be in (0, 1)");
  std::vector<ModelSpec> specs;
  for (const auto& s : c.f.models) specs.push_back(parse_model_spec(s));
  c.extra["models"] = c.f.models;
  c.extra["alpha"] = c.f.alpha;

  auto table = aliases(c);
  std::optional<LexiconRules> rules;
  std::unique_ptr<ChatClient> client;
  int code = kExitOk;

  std::vector<BiasRow> rows;
  io::CsvWriter outcomes_csv({"model", "task", "pair_id", "race_ethnicity", "gender", "gold", "pred_original",
                              "pred_injected", "mismatch"});
  io::CsvWriter excluded_csv({"model", "task", "pair_id"});
  std::vector<Task> task_list = tasks(c);
  for (Task task : task_list) {
    auto inputs = pair_inputs(pairs, originals, task);
    if (inputs.empty()) {
      spdlog::warn("bias-eval: no validated pairs with {} labels", to_string(task));
      continue;
    }
    std::vector<ModelOutcomes> per_model;
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const auto& spec = specs[k];
      BatchClassifier classify;
      if (spec.kind == "lexicon") {
        if (!rules) rules = lexicon(c);
        classify = [&](const std::vector<SentenceInput>& batch) {
          std::vector<std::string> texts;
          for (const auto& s : batch) texts.push_back(s.text);
          auto labels = kernels::classify_lexicon_parallel(*rules, texts);
          std::vector<std::optional<CategorySet>> out;
          for (const auto& l : labels) out.emplace_back(l.for_task(task));
          return out;
        };
      } else if (spec.kind == "remote") {
        if (!client) client = std::make_unique<ChatClient>(remote_config(c));
        classify = [&](const std::vector<SentenceInput>& batch) {
          RemoteClassifyOptions options;
          options.task = task;
          options.aliases = table;
          std::vector<std::optional<CategorySet>> out;
          for (const auto& r : classify_remote(*client, batch, options)) {
            if (r.error) {
              out.emplace_back(std::nullopt);
            } else {
              out.emplace_back(r.labels);
            }
          }
          return out;
        };
      } else {
        if (!fs::is_regular_file(spec.path)) throw IoError("imported predictions not found: " + spec.path.string());
        c.inputs["predictions:" + spec.name] = spec.path;
        auto imported = import_predictions(spec.path, nullptr, table);
        fail_on_diagnostics(imported.diagnostics, spec.path);
        auto map = prediction_map(imported.records, task);
        classify = [map = std::move(map), &spec](const std::vector<SentenceInput>& batch) {
          std::vector<std::optional<CategorySet>> out;
          std::vector<std::string> missing;
          for (const auto& s : batch) {
            auto it = map.find(s.id);
            if (it == map.end()) {
              missing.push_back(s.id);
              continue;
            }
            out.emplace_back(it->second);
          }
          if (!missing.empty()) {
            throw ValidationError(fmt::format("{}: {} pair sentence(s) lack predictions, e.g. {}", spec.path.string(),
                                              missing.size(), missing.front()));
          }
          return out;
        };
      }
      auto eval = evaluate_pairs(inputs, classify);
      if (!eval.excluded.empty()) {
        code = kExitTransport;
        for (const auto& id : eval.excluded) excluded_csv.row({spec.name, std::string(to_string(task)), id});
      }
      for (const auto& o : eval.outcomes) {
        outcomes_csv.row({spec.name, std::string(to_string(task)), o.pair_id,
                          std::string(to_string(o.descriptor.race_ethnicity)), std::string(to_string(o.descriptor.gender)),
                          join_set(o.gold), join_set(o.pred_original), join_set(o.pred_injected),
                          o.mismatch ? "true" : "false"});
      }
      per_model.push_back({spec.name, std::move(eval.outcomes)});
    }
    auto part = per_model.size() == 2 ? significance_report(per_model[0], per_model[1], task, c.f.alpha)
                                      : single_model_report(per_model[0], task, c.f.alpha);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return with_output(c, [&](report::OutputDir& out) {
    out.write("bias_report.csv", bias_report_csv(rows));
    out.write("pair_outcomes.csv", outcomes_csv.str());
    out.write("excluded_pairs.csv", excluded_csv.str());
    out.write("bias.md", report::bias_markdown(rows));
    for (Task task : task_list) out.write(fmt::format("bias_{}.svg", to_string(task)), report::bias_chart(rows, task));
    if (code == kExitTransport) spdlog::error("bias-eval: pairs excluded after backend failures; see excluded_pairs.csv");
    return code;
  });
}

// ---- report ----------------------------------------------------------------

std::vector<report::ModelEval> read_metrics_csv(const fs::path& path) {
  auto table = io::CsvTable::load(path);
  std::vector<report::ModelEval> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto task = table.get(i, "task");
    const auto gran = table.get(i, "granularity");
    const auto key = std::tuple{task, table.get(i, "model"), gran};
    auto [it, fresh] = index.try_emplace(key, out.size());
    if (fresh) {
      out.push_back({gran == "patient" ? table.get(i, "model") + " (patient)" : table.get(i, "model"), parse_task(task), {}});
    }
    auto& e = out[it->second];
    const auto label = table.get(i, "label");
    const double f1 = std::stod(table.get(i, "f1"));
    if (label == "MACRO_F1") {
      e.report.macro_f1 = f1;
    } else if (label == "MACRO_F1_SIX") {
      e.report.macro_f1_six = f1;
    } else {
      LabelResult lr;
      lr.counts.label = EvalLabel::parse(label);
      lr.metrics = {std::stod(table.get(i, "precision")), std::stod(table.get(i, "recall")), f1};
      e.report.labels.push_back(lr);
    }
  }
  return out;
}

std::vector<BiasRow> read_bias_csv(const fs::path& path) {
  auto table = io::CsvTable::load(path);
  std::vector<BiasRow> rows;
  for (std::size_t i = 0; i < table.size(); ++i) {
    BiasRow r;
    r.group = table.get(i, "group");
    r.task = table.get(i, "task");
    r.model = table.get(i, "model");
    r.mismatches = std::stoll(table.get(i, "mismatches"));
    r.pairs = std::stoll(table.get(i, "pairs"));
    r.rate = std::stod(table.get(i, "rate"));
    r.test = table.get(i, "test");
    if (!table.get(i, "statistic").empty()) r.statistic = std::stod(table.get(i, "statistic"));
    if (!table.get(i, "p").empty()) r.p = std::stod(table.get(i, "p"));
    r.significant = table.get(i, "significant") == "true";
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_report(Ctx& c) {
  if (c.f.from.empty()) throw ValidationError("report needs at least one --from directory");
  std::vector<report::ModelEval> evals;
  std::vector<BiasRow> bias_rows;
  std::string ablation_md;
  std::string patient_md;
  std::optional<std::string> patient_svg;
  for (const auto& dir : c.f.from) {
    if (!fs::is_directory(dir)) throw IoError("results directory not found: " + dir);
    const fs::path d(dir);
    try {
      if (fs::is_regular_file(d / "metrics.csv")) {
        c.inputs["metrics:" + dir] = d / "metrics.csv";
        auto part = read_metrics_csv(d / "metrics.csv");
        evals.insert(evals.end(), part.begin(), part.end());
      }
      if (fs::is_regular_file(d / "bias_report.csv")) {
        c.inputs["bias:" + dir] = d / "bias_report.csv";
        auto part = read_bias_csv(d / "bias_report.csv");
        bias_rows.insert(bias_rows.end(), part.begin(), part.end());
      }
      if (fs::is_regular_file(d / "ablation.csv")) {
        c.inputs["ablation:" + dir] = d / "ablation.csv";
        for (Task task : kAllTasks) {
          auto rows = read_ablation_results(d / "ablation.csv", task);
          if (!rows.empty()) ablation_md += report::ablation_markdown(task, rows);
        }
      }
      if (fs::is_regular_file(d / "patient.md")) {
        c.inputs["patient:" + dir] = d / "patient.md";
        patient_md += io::read_file(d / "patient.md");
        if (fs::is_regular_file(d / "patient_f1.svg")) patient_svg = io::read_file(d / "patient_f1.svg");
      }
    } catch (const std::invalid_argument&) {
      throw ValidationError("malformed number in results under " + dir);
    } catch (const std::out_of_range&) {
      throw ValidationError("out-of-range number in results under " + dir);
    }
  }
  return with_output(c, [&](report::OutputDir& out) {
    std::string md = "# SDoH workbench report\n\n";
    bool any = false;
    if (!evals.empty()) {
      md += "# Classification performance\n\n" + report::metrics_markdown(evals);
      any = true;
    }
    if (!ablation_md.empty()) {
      md += "# Ablation\n\n" + ablation_md;
      any = true;
    }
    if (!bias_rows.empty()) {
      md += report::bias_markdown(bias_rows);
      for (Task task : kAllTasks) {
        const bool has = std::any_of(bias_rows.begin(), bias_rows.end(), [&](const BiasRow& r) { return r.task == to_string(task); });
        if (!has) continue;
        const auto name = fmt::format("bias_{}.svg", to_string(task));
        out.write(name, report::bias_chart(bias_rows, task));
        md += fmt::format("![Mismatch rates ({})]({})\n\n", to_string(task), name);
      }
      any = true;
    }
    if (!patient_md.empty()) {
      md += patient_md + "\n";
      if (patient_svg) {
        out.write("patient_f1.svg", *patient_svg);
        md += "![Patient-level F1](patient_f1.svg)\n\n";
      }
      any = true;
    }
    if (!any) md += "No results found.\n";
    out.write("report.md", md);
    return kExitOk;
  });
}

// ---- wiring ------------------------------------------------------------------

constexpr std::string_view kNotesColumns =
    "Notes (JSONL keys or CSV columns): note_id, patient_id, author_role "
    "(physician|physician_assistant|nurse_practitioner|registered_nurse|social_worker), date (YYYY-MM-DD), text, "
    "optional gender, race, ethnicity.";

void add_notes(CLI::App* s, Flags& f) {
  s->add_option("--notes", f.notes, "Note corpus (paths.corpus)");
  s->add_option("--format", f.format, "Corpus format jsonl|csv (default by extension)");
}

void add_resources(CLI::App* s, Flags& f) {
  s->add_option("--headers", f.headers, "Extra section-header aliases CSV: alias,canonical");
  s->add_option("--abbreviations", f.abbreviations, "Extra abbreviations, one per line");
}

void add_remote(CLI::App* s, Flags& f) {
  s->add_option("--base-url", f.base_url, "Chat-completions base URL (remote.base_url)");
  s->add_option("--model", f.model, "Remote model name (remote.model)");
  s->add_option("--cache", f.cache, "Response cache JSONL: key,response (remote.cache)");
  s->add_option("--api-key-env", f.api_key_env, "Environment variable holding the API key");
  s->add_flag("--offline", f.offline, "Serve only from the response cache");
  s->add_option("--max-concurrency", f.max_concurrency, "Requests in flight at once");
  s->add_option("--max-retries", f.max_retries, "Retries per request");
  s->add_option("--timeout-ms", f.timeout_ms, "Per-request timeout");
}

void add_task(CLI::App* s, Flags& f) {
  s->add_option("--task", f.task, "any | adverse | both (task)")->check(CLI::IsMember({"any", "adverse", "both"}));
}

int dispatch(const std::vector<std::string>& args) {
  Flags f;
  CLI::App app{"SDoH extraction workbench", "sdoh"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", f.config, "YAML run config")->check(CLI::ExistingFile);
  app.add_option("--out", f.out, "Output directory (output)");
  app.add_option("--seed", f.seed, "Random seed (seed)");
  app.add_flag("-v,--verbose", f.verbose, "Debug logging");
  app.add_flag("-q,--quiet", f.quiet, "Warnings and errors only");
  app.footer(
      "Exit codes: 0 success, 1 validation error, 2 backend/transport failure.\n"
      "Every run writes manifest.json (config snapshot, seed, input and output sha256) into the output directory.");

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a note corpus");
  add_notes(ingest, f);
  ingest->add_flag("--lenient", f.lenient, "Skip malformed records instead of failing");
  ingest->footer(std::string(kNotesColumns) +
                 "\nOutputs: notes.jsonl; ingest_summary.csv (metric,value); ingest_diagnostics.txt when records "
                 "were skipped.");

  auto* filter = app.add_subcommand("filter", "Apply note inclusion rules");
  add_notes(filter, f);
  add_resources(filter, f);
  filter->add_option("--min-tokens", f.min_tokens, "Token floor (filter.min_tokens)");
  filter->add_option("--max-section-tokens", f.max_section_tokens, "Section cap (filter.max_section_tokens)");
  filter->add_option("--exempt-role", f.exempt_roles, "Roles exempt from the section cap (repeatable)");
  filter->add_option("--courses", f.courses, "Treatment courses CSV: patient_id,first_treatment,last_treatment");
  filter->add_option("--days-before", f.days_before, "Date window start offset");
  filter->add_option("--days-after", f.days_after, "Date window end offset");
  filter->footer(std::string(kNotesColumns) +
                 "\nOutputs: notes.jsonl (kept); rejections.csv (note_id,patient_id,author_role,reason); "
                 "filter_summary.csv (outcome,notes).");

  auto* segment = app.add_subcommand("segment", "Sectionize notes and split sentences");
  add_notes(segment, f);
  add_resources(segment, f);
  segment->footer(
      "Outputs: sentences.jsonl (sentence_id=note_id:index, note_id, patient_id, sentence_index, section, char_start, "
      "char_end, text); sections.csv (note_id,section,char_start,char_end,sentences).");

  auto* split = app.add_subcommand("split", "Assign patients to train/dev/test");
  add_notes(split, f);
  split->add_option("--ratios", f.ratios, "train,dev,test fractions")->capture_default_str();
  split->footer("Outputs: splits.csv (patient_id,split); split_summary.csv (split,patients,notes).");

  auto* export_train = app.add_subcommand("export-train", "Write training items with negative undersampling");
  export_train->add_option("--sentences", f.sentences, "sentences.jsonl from segment");
  export_train->add_option("--gold", f.gold, "Gold annotations JSONL (paths.annotations)");
  export_train->add_option("--splits", f.splits, "splits.csv from split");
  export_train->add_option("--split", f.split, "Split to export")->capture_default_str();
  export_train->add_option("--negative-ratio", f.negative_ratio, "Negatives kept per positive (default 1)");
  export_train->add_option("--synthetic", f.synthetic, "Validated synthetic sentences");
  export_train->add_flag("--with-synthetic", f.with_synthetic, "Append validated synthetic sentences");
  add_task(export_train, f);
  export_train->footer(
      "Gold JSONL: {sentence_id, labels:[CATEGORY_attribute...]} or {sentence_id, any:[...], adverse:[...]}.\n"
      "Outputs: train_<task>.jsonl (sentence_id,text,labels,synthetic); export_summary.csv "
      "(task,positives,negatives_available,negatives_kept,synthetic,total).");

  auto* classify = app.add_subcommand("classify", "Label sentences with a classifier backend");
  classify->add_option("--sentences", f.sentences, "sentences.jsonl to classify");
  classify->add_option("--synthetic", f.synthetic, "Synthetic sentences to classify instead");
  classify->add_option("--backend", f.backend, "lexicon | remote | imported")
      ->check(CLI::IsMember({"lexicon", "remote", "imported"}))
      ->capture_default_str();
  classify->add_option("--model-id", f.model_id, "Model id recorded on predictions");
  classify->add_option("--lexicon", f.lexicon, "Lexicon rules CSV: keyword,category,adverse");
  classify->add_option("--aliases", f.aliases, "Label alias CSV: alias,canonical");
  classify->add_option("--import", f.import_path, "Predictions JSONL to import");
  classify->add_option("--exemplars", f.exemplars, "Few-shot exemplars JSONL: text,labels");
  classify->add_flag("--include-negative", f.include_negative, "Offer NO_SDOH in the category list");
  add_task(classify, f);
  add_remote(classify, f);
  classify->footer(
      "Outputs: predictions.jsonl (sentence_id,task,labels,model_id,backend,parse_status,raw_response,error,retries); "
      "classify_summary.csv (task,model_id,sentences,ok,salvaged,failed).");

  auto* generate = app.add_subcommand("generate-synthetic", "Generate or validate synthetic sentences");
  generate->add_option("--round", f.round, "Generation round 1 or 2")->capture_default_str();
  generate->add_option("--n-per-category", f.n_per_category, "Sentences per prompt")->capture_default_str();
  generate->add_option("--max-requests", f.max_requests, "Requests per prompt while topping up")->capture_default_str();
  generate->add_option("--references", f.references, "Round-1 synthetic JSONL (round 2)");
  generate->add_option("--max-references", f.max_references, "References per round-2 prompt")->capture_default_str();
  generate->add_option("--synthetic", f.synthetic, "Synthetic JSONL to validate");
  generate->add_option("--apply-decisions", f.decisions, "decisions.csv: id,decision,corrected_labels");
  add_remote(generate, f);
  generate->footer(
      "Outputs: synthetic.jsonl (id,text,category,adverse,round,batch_id,validated,reference_batch,corrected_labels); "
      "generation_summary.csv (batch_id,category,adverse,requested,generated); with --apply-decisions: audit.csv "
      "(id,previous,decision,labels_before,labels_after) and validation_summary.csv (metric,value).");

  auto* inject = app.add_subcommand("inject-demographics", "Create or validate demographic-injection pairs");
  inject->add_option("--synthetic", f.synthetic, "Validated synthetic JSONL (originals)");
  inject->add_option("--pairs", f.pairs, "demo_pairs.jsonl to validate");
  inject->add_option("--apply-decisions", f.decisions, "decisions.csv: id,decision");
  inject->add_option("--batch-size", f.batch_size, "Sentences per prompt")->capture_default_str();
  inject->add_flag("--include-unreviewed", f.include_unreviewed, "Also inject unreviewed sentences");
  add_remote(inject, f);
  inject->footer(
      "Outputs: demo_pairs.jsonl (pair_id,original_id,injected_text,race_ethnicity,gender,validated); "
      "injection_diagnostics.txt for rejected batches; with --apply-decisions: audit.csv, validation_summary.csv.");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("--gold", f.gold, "Gold annotations JSONL");
  evaluate->add_option("--pred", f.pred, "predictions.jsonl");
  evaluate->add_option("--coder-b", f.coder_b, "Second annotator JSONL for agreement");
  evaluate->add_option("--granularity", f.granularity, "sentence | patient")->capture_default_str();
  evaluate->add_option("--aliases", f.aliases, "Label alias CSV: alias,canonical");
  evaluate->add_option("--top", f.top, "Rows in discrepancies.md")->capture_default_str();
  evaluate->add_flag("--subset", f.subset, "Score only sentences that have predictions");
  add_notes(evaluate, f);
  add_task(evaluate, f);
  evaluate->footer(
      "Outputs: metrics.csv (task,model,granularity,label,precision,recall,f1; MACRO_F1 rows are the 7-class mean, "
      "MACRO_F1_SIX the category mean); confusion.csv (task,model,granularity,label,tp,fp,fn,tn); discrepancies.csv "
      "(task,model,rank,gold,predicted,count); metrics.md; discrepancies.md; agreement.csv "
      "(label,krippendorff_alpha,cohen_kappa,units) with --coder-b.");

  auto* ablate = app.add_subcommand("ablate", "Build the gold-reduction ablation schedule");
  ablate->add_option("--sentences", f.sentences, "sentences.jsonl");
  ablate->add_option("--gold", f.gold, "Gold annotations JSONL");
  ablate->add_option("--splits", f.splits, "splits.csv");
  ablate->add_option("--split", f.split, "Split to ablate")->capture_default_str();
  ablate->add_option("--synthetic", f.synthetic, "Validated synthetic sentences");
  ablate->add_option("--percents", f.percents, "Percents removed (default 10 25 40 50 70 75 90 100)");
  ablate->add_option("--negative-ratio", f.negative_ratio, "Undersample negatives first (0 = keep all)");
  ablate->add_option("--results", f.results, "Filled ablation.csv with per-label F1 scores");
  ablate->add_flag("--no-gold-only", f.no_gold_only, "Skip the gold-only variant");
  ablate->add_flag("--no-synthetic", f.no_synthetic, "Skip the gold+synthetic variant");
  add_task(ablate, f);
  ablate->footer(
      "Outputs: ablation/<task>-<variant>-pNNN.jsonl exports; ablation_exports.csv "
      "(task,percent_removed,variant,items,gold_positives,gold_negatives,synthetic,file); ablation.csv "
      "(task,percent_removed,variant,macro_f1,no_sdoh,employment,housing,parent,relationship,support,transportation; "
      "blank until --results fills them); ablation.md.");

  auto* bias = app.add_subcommand("bias-eval", "Compare predictions before and after demographic injection");
  bias->add_option("--pairs", f.pairs, "Validated demo_pairs.jsonl");
  bias->add_option("--synthetic", f.synthetic, "Synthetic originals JSONL");
  bias->add_option("--model-spec", f.models, "NAME=lexicon|remote|imported:PATH (one or two)");
  bias->add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
  bias->add_option("--lexicon", f.lexicon, "Lexicon rules CSV");
  bias->add_option("--aliases", f.aliases, "Label alias CSV");
  add_task(bias, f);
  add_remote(bias, f);
  bias->footer(
      "Imported predictions use sentence ids <pair_id>/original and <pair_id>/injected.\n"
      "Outputs: bias_report.csv (group,task,model,mismatches,pairs,rate,test,statistic,p,significant); "
      "pair_outcomes.csv (model,task,pair_id,race_ethnicity,gender,gold,pred_original,pred_injected,mismatch); "
      "excluded_pairs.csv (model,task,pair_id); bias.md; bias_<task>.svg.");

  auto* patient = app.add_subcommand("patient-eval", "Patient-level adverse SDoH vs gold and Z-codes");
  patient->add_option("--gold", f.gold, "Gold annotations JSONL");
  patient->add_option("--pred", f.pred, "Adverse-task predictions.jsonl");
  patient->add_option("--zcodes", f.zcodes, "Z-code CSV: patient_id,code,date");
  patient->add_option("--zcode-map", f.zcode_map, "Z-code map CSV: prefix,categories,description");
  patient->add_option("--model-id", f.model_id, "Model to score when the file holds several");
  patient->add_option("--aliases", f.aliases, "Label alias CSV");
  patient->add_flag("--subset", f.subset, "Score only sentences that have predictions");
  add_notes(patient, f);
  patient->footer(
      "Outputs: patient_metrics.csv (source,label,tp,fp,fn,tn,precision,recall,f1); patient_labels.csv "
      "(patient_id,gold,model,zcode); patient.md; patient_f1.svg; zcode_warnings.txt.");

  auto* rep = app.add_subcommand("report", "Collect result directories into one Markdown report");
  rep->add_option("--from", f.from, "Result directories (repeatable)");
  rep->footer("Reads metrics.csv, ablation.csv, bias_report.csv and patient.md. Outputs: report.md and SVG charts.");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n"
              << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitValidation;
  }

  spdlog::drop("sdoh");
  auto logger = spdlog::stderr_color_mt("sdoh");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(f.verbose ? spdlog::level::debug : f.quiet ? spdlog::level::warn : spdlog::level::info);

  Ctx c;
  c.f = f;
  c.command = app.get_subcommands().front()->get_name();
  if (!f.config.empty()) {
    c.cfg = load_config(f.config);
    c.inputs["config"] = f.config;
  }
  if (f.seed) c.cfg.seed = *f.seed;
  if (!f.task.empty()) c.cfg.task = f.task;
  if (!f.out.empty()) c.cfg.output = f.out;

  static const std::map<std::string, int (*)(Ctx&)> kCommands = {
      {"ingest", cmd_ingest},         {"filter", cmd_filter},
      {"segment", cmd_segment},       {"split", cmd_split},
      {"export-train", cmd_export_train}, {"classify", cmd_classify},
      {"generate-synthetic", cmd_generate}, {"inject-demographics", cmd_inject},
      {"evaluate", cmd_evaluate},     {"ablate", cmd_ablate},
      {"bias-eval", cmd_bias_eval},   {"patient-eval", cmd_patient_eval},
      {"report", cmd_report}};
  return kCommands.at(c.command)(c);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace sdoh::cli
