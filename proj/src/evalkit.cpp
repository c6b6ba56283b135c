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

#include "sdoh/evalkit.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "sdoh/io.hpp"
#include "sdoh/kernels.hpp"
#include "sdoh/rng.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

using json = nlohmann::json;

std::size_t slot_of(EvalLabel l) {
  switch (l.kind()) {
    case EvalLabel::Kind::kCategory: return static_cast<std::size_t>(l.category());
    case EvalLabel::Kind::kNoSdoh: return kernels::kNoSdohSlot;
    case EvalLabel::Kind::kAnySdoh: return kernels::kAnySdohSlot;
  }
  return kernels::kNoSdohSlot;
}

ConfusionCounts from_slot(const kernels::LabelCounts& c, EvalLabel label, Granularity g) {
  ConfusionCounts out;
  out.label = label;
  out.granularity = g;
  out.tp = c.tp;
  out.fp = c.fp;
  out.fn = c.fn;
  out.tn = c.tn;
  return out;
}

kernels::CountTable count_all(const LabelMap& gold, const LabelMap& pred) {
  check_aligned(gold, pred);
  std::vector<std::uint8_t> g;
  std::vector<std::uint8_t> p;
  g.reserve(gold.size());
  p.reserve(gold.size());
  auto pit = pred.begin();
  for (const auto& [id, labels] : gold) {
    g.push_back(labels.bits());
    p.push_back((pit++)->second.bits());
  }
  return kernels::count_confusion_parallel(g, p);
}

double safe_div(double num, double den) { return den == 0 ? 0.0 : num / den; }

}  // namespace

bool EvalLabel::contained_in(CategorySet s) const {
  switch (kind_) {
    case Kind::kCategory: return s.contains(category_);
    case Kind::kNoSdoh: return s.empty();
    case Kind::kAnySdoh: return !s.empty();
  }
  return false;
}

std::string EvalLabel::name() const {
  switch (kind_) {
    case Kind::kCategory: return std::string(to_string(category_));
    case Kind::kNoSdoh: return "NO_SDOH";
    case Kind::kAnySdoh: return "ANY_SDOH";
  }
  return "";
}

std::string EvalLabel::display() const {
  switch (kind_) {
    case Kind::kCategory: return std::string(display_name(category_));
    case Kind::kNoSdoh: return "No SDoH";
    case Kind::kAnySdoh: return "Any SDoH";
  }
  return "";
}

EvalLabel EvalLabel::parse(std::string_view s) {
  auto t = text::upper(text::trim(s));
  if (t == "NO_SDOH" || t == "NO SDOH") return no_sdoh();
  if (t == "ANY_SDOH" || t == "ANY SDOH") return any_sdoh();
  if (auto c = category_from_canonical(t)) return *c;
  for (Category c : kAllCategories) {
    if (text::iequals(display_name(c), text::trim(s))) return c;
  }
  throw ValidationError(fmt::format("unknown evaluation label '{}'", s));
}

int EvalLabel::order() const { return static_cast<int>(slot_of(*this)); }

std::vector<EvalLabel> seven_labels() {
  std::vector<EvalLabel> out(kAllCategories.begin(), kAllCategories.end());
  out.push_back(EvalLabel::no_sdoh());
  return out;
}

std::vector<EvalLabel> report_label_order() {
  std::vector<EvalLabel> cats(kAllCategories.begin(), kAllCategories.end());
  std::sort(cats.begin(), cats.end(),
            [](EvalLabel a, EvalLabel b) { return display_name(a.category()) < display_name(b.category()); });
  std::vector<EvalLabel> out{EvalLabel::no_sdoh()};
  out.insert(out.end(), cats.begin(), cats.end());
  return out;
}

std::string_view to_string(Granularity g) { return g == Granularity::kSentence ? "sentence" : "patient"; }

void check_aligned(const LabelMap& gold, const LabelMap& pred) {
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& [id, _] : gold)
    if (!pred.count(id)) missing.push_back(id);
  for (const auto& [id, _] : pred)
    if (!gold.count(id)) extra.push_back(id);
  if (missing.empty() && extra.empty()) return;
  auto head = [](const std::vector<std::string>& v) {
    std::vector<std::string> h(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(v.size(), 5)));
    return text::join(h, ", ") + (v.size() > 5 ? ", ..." : "");
  };
  std::string msg = "gold and prediction ids differ:";
  if (!missing.empty()) msg += fmt::format(" {} without prediction ({})", missing.size(), head(missing));
  if (!extra.empty()) msg += fmt::format(" {} without gold ({})", extra.size(), head(extra));
  throw ValidationError(msg);
}

ConfusionCounts confusion(const LabelMap& gold, const LabelMap& pred, EvalLabel label, Granularity granularity) {
  auto table = count_all(gold, pred);
  return from_slot(table[slot_of(label)], label, granularity);
}

Metrics metrics(const ConfusionCounts& c) {
  Metrics m;
  m.precision = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  m.recall = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  m.f1 = safe_div(2 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

double macro_f1(std::span<const Metrics> per_label) {
  if (per_label.empty()) throw ValidationError("macro-F1 needs at least one label");
  double sum = 0;
  for (const auto& m : per_label) sum += m.f1;
  return sum / static_cast<double>(per_label.size());
}

double macro_f1(std::span<const double> f1s) {
  if (f1s.empty()) throw ValidationError("macro-F1 needs at least one label");
  return std::accumulate(f1s.begin(), f1s.end(), 0.0) / static_cast<double>(f1s.size());
}

EvalReport evaluate(const LabelMap& gold, const LabelMap& pred, Granularity granularity) {
  auto table = count_all(gold, pred);
  EvalReport r;
  r.units = gold.size();
  std::vector<Metrics> all;
  for (EvalLabel l : seven_labels()) {
    LabelResult lr{from_slot(table[slot_of(l)], l, granularity), {}};
    lr.metrics = metrics(lr.counts);
    all.push_back(lr.metrics);
    r.labels.push_back(lr);
  }
  r.macro_f1 = macro_f1(std::span<const Metrics>(all));
  r.macro_f1_six = macro_f1(std::span<const Metrics>(all.data(), kNumCategories));
  return r;
}

// ---- agreement ---------------------------------------------------------------

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("kappa sequences differ in length");
  if (a.empty()) throw ValidationError("kappa needs at least one unit");
  const double n = static_cast<double>(a.size());
  std::map<int, std::pair<double, double>> marg;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) agree += 1;
    marg[a[i]].first += 1;
    marg[b[i]].second += 1;
  }
  const double po = agree / n;
  double pe = 0;
  for (const auto& [v, m] : marg) pe += (m.first / n) * (m.second / n);
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

double krippendorff_alpha(const std::vector<std::vector<int>>& units) {
  std::map<std::pair<int, int>, double> o;
  std::map<int, double> nc;
  bool pairable = false;
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    pairable = true;
    const double w = 1.0 / static_cast<double>(u.size() - 1);
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) {
        if (i == j) continue;
        o[{u[i], u[j]}] += w;
        nc[u[i]] += w;
      }
    }
  }
  if (!pairable) throw ValidationError("alpha needs at least one unit with two or more values");
  double n = 0;
  for (const auto& [c, v] : nc) n += v;
  double observed = 0;
  for (const auto& [ck, v] : o)
    if (ck.first != ck.second) observed += v;
  double expected = 0;
  for (const auto& [c, vc] : nc)
    for (const auto& [k, vk] : nc)
      if (c != k) expected += vc * vk;
  if (expected == 0) return 1.0;
  return (expected - (n - 1.0) * observed) / expected;
}

AgreementReport agreement(const LabelMap& coder_a, const LabelMap& coder_b) {
  check_aligned(coder_a, coder_b);
  AgreementReport r;
  std::vector<int> pooled_a;
  std::vector<int> pooled_b;
  for (EvalLabel l : seven_labels()) {
    std::vector<int> a;
    std::vector<int> b;
    std::vector<std::vector<int>> units;
    auto bit = coder_b.begin();
    for (const auto& [id, la] : coder_a) {
      const int va = l.contained_in(la) ? 1 : 0;
      const int vb = l.contained_in((bit++)->second) ? 1 : 0;
      a.push_back(va);
      b.push_back(vb);
      units.push_back({va, vb});
    }
    AgreementRow row;
    row.label = l;
    row.units = a.size();
    row.kappa = cohen_kappa(a, b);
    row.alpha = krippendorff_alpha(units);
    r.rows.push_back(row);
    pooled_a.insert(pooled_a.end(), a.begin(), a.end());
    pooled_b.insert(pooled_b.end(), b.begin(), b.end());
  }
  std::vector<std::vector<int>> units;
  for (std::size_t i = 0; i < pooled_a.size(); ++i) units.push_back({pooled_a[i], pooled_b[i]});
  r.overall_kappa = cohen_kappa(pooled_a, pooled_b);
  r.overall_alpha = krippendorff_alpha(units);
  return r;
}

// ---- discrepancies -------------------------------------------------------------

std::vector<DiscrepancyRow> discrepancy_table(const LabelMap& gold, const LabelMap& pred) {
  check_aligned(gold, pred);
  std::map<std::pair<int, int>, std::int64_t> counts;
  auto pit = pred.begin();
  for (const auto& [id, g] : gold) {
    const CategorySet p = (pit++)->second;
    if (g == p) continue;
    auto side = [](CategorySet mine, CategorySet other) {
      std::vector<EvalLabel> out;
      if (mine.empty()) {
        out.push_back(EvalLabel::no_sdoh());
        return out;
      }
      for (Category c : mine.members())
        if (!other.contains(c)) out.push_back(c);
      return out;
    };
    for (EvalLabel gl : side(g, p))
      for (EvalLabel pl : side(p, g)) ++counts[{gl.order(), pl.order()}];
  }
  auto label_at = [](int order) -> EvalLabel {
    if (order == static_cast<int>(kernels::kNoSdohSlot)) return EvalLabel::no_sdoh();
    return static_cast<Category>(order);
  };
  std::vector<DiscrepancyRow> rows;
  for (const auto& [key, n] : counts) rows.push_back({label_at(key.first), label_at(key.second), n});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const DiscrepancyRow& a, const DiscrepancyRow& b) { return a.count > b.count; });
  return rows;
}

// ---- ablation --------------------------------------------------------------------

AblationPlan ablation_schedule(const std::vector<TrainItem>& train, const std::vector<TrainItem>& synthetic_pool,
                               const AblationOptions& options) {
  for (int p : options.percents) {
    if (p < 0 || p > 100) throw ValidationError(fmt::format("ablation percent {} outside 0..100", p));
    if (p == 100 && options.with_synthetic && synthetic_pool.empty()) {
      throw ValidationError("100% removal with synthetic data needs a non-empty synthetic pool");
    }
  }
  if (!options.gold_only && !options.with_synthetic) throw ValidationError("no ablation variant selected");

  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < train.size(); ++i) (train[i].positive() ? pos : neg).push_back(i);
  Rng rng(options.seed);
  rng.shuffle(std::span<std::size_t>(pos));
  rng.shuffle(std::span<std::size_t>(neg));

  AblationPlan plan;
  for (int p : options.percents) {
    const std::size_t drop_pos = pos.size() * static_cast<std::size_t>(p) / 100;
    const std::size_t drop_neg = neg.size() * static_cast<std::size_t>(p) / 100;
    std::vector<bool> removed(train.size(), false);
    for (std::size_t k = 0; k < drop_pos; ++k) removed[pos[k]] = true;
    for (std::size_t k = 0; k < drop_neg; ++k) removed[neg[k]] = true;

    AblationExport gold;
    gold.percent = p;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (removed[i]) continue;
      gold.items.push_back(train[i]);
      ++(train[i].positive() ? gold.gold_positives : gold.gold_negatives);
    }
    auto add = [&](AblationExport e) {
      AblationRow row{e.percent, e.with_synthetic, std::nullopt, std::nullopt};
      if (e.items.empty()) {
        std::map<std::string, double> zeros;
        for (EvalLabel l : seven_labels()) zeros[l.name()] = 0.0;
        row.f1 = zeros;
        row.macro_f1 = 0.0;
      }
      plan.report.push_back(std::move(row));
      plan.exports.push_back(std::move(e));
    };
    if (options.with_synthetic) {
      AblationExport with = gold;
      with.with_synthetic = true;
      for (const auto& s : synthetic_pool) {
        with.items.push_back(s);
        with.items.back().synthetic = true;
      }
      with.synthetic = synthetic_pool.size();
      if (options.gold_only) add(std::move(gold));
      add(std::move(with));
    } else {
      add(std::move(gold));
    }
  }
  return plan;
}

// ---- patient level -----------------------------------------------------------------

std::string note_of_sentence(std::string_view sentence_id) {
  auto colon = sentence_id.rfind(':');
  return std::string(colon == std::string_view::npos ? sentence_id : sentence_id.substr(0, colon));
}

namespace {

std::map<std::string, std::string> note_to_patient(const NoteCollection& notes, LabelMap& universe) {
  std::map<std::string, std::string> out;
  for (const auto& n : notes) {
    out[n.note_id] = n.patient_id;
    universe.emplace(n.patient_id, CategorySet{});
  }
  return out;
}

}  // namespace

LabelMap patient_aggregate(const LabelMap& sentence_labels, const NoteCollection& notes) {
  LabelMap out;
  auto owner = note_to_patient(notes, out);
  std::vector<std::string> orphans;
  for (const auto& [sid, labels] : sentence_labels) {
    auto it = owner.find(note_of_sentence(sid));
    if (it == owner.end()) {
      orphans.push_back(sid);
      continue;
    }
    out[it->second] |= labels;
  }
  if (!orphans.empty()) {
    if (orphans.size() > 5) orphans.resize(5), orphans.emplace_back("...");
    throw ValidationError(fmt::format("sentences without a corpus note: {}", text::join(orphans, ", ")));
  }
  return out;
}

LabelMap patient_aggregate(const std::vector<PredictionRecord>& preds, Task task, const NoteCollection& notes) {
  LabelMap sentence;
  for (const auto& r : preds) {
    if (r.task != task) continue;
    sentence[r.sentence_id] |= r.labels;
  }
  return patient_aggregate(sentence, notes);
}

std::vector<ZCodeRecord> parse_zcodes(std::string_view csv, const std::string& source) {
  auto table = io::CsvTable::parse(csv);
  if (table.size() == 0) return {};
  if (!table.has_column("patient_id") || !table.has_column("code")) {
    throw ValidationError("zcodes.csv needs columns patient_id,code[,date]");
  }
  std::vector<ZCodeRecord> out;
  std::vector<Diagnostic> diags;
  for (std::size_t r = 0; r < table.size(); ++r) {
    ZCodeRecord z{std::string(text::trim(table.get(r, "patient_id"))), std::string(text::trim(table.get(r, "code"))),
                  std::string(text::trim(table.get(r, "date"))), table.line(r)};
    if (z.patient_id.empty() || z.code.empty()) {
      diags.push_back({z.line, "missing patient_id or code"});
      continue;
    }
    out.push_back(std::move(z));
  }
  if (!diags.empty()) throw ValidationError(format_diagnostics(diags, source));
  return out;
}

std::vector<ZCodeRecord> load_zcodes(const std::filesystem::path& path) {
  return parse_zcodes(io::read_file(path), path.string());
}

PatientComparison compare_zcodes(const LabelMap& gold, const LabelMap& model, const std::vector<ZCodeRecord>& zcodes,
                                 const ZCodeTable& table) {
  check_aligned(gold, model);
  PatientComparison out;
  for (const auto& [pid, _] : gold) out.zcode_labels.emplace(pid, CategorySet{});
  std::vector<Diagnostic> diags;
  std::set<std::string> unknown;
  for (const auto& z : zcodes) {
    if (!gold.count(z.patient_id)) {
      unknown.insert(z.patient_id);
      continue;
    }
    try {
      auto m = table.map(z.code);
      out.zcode_labels[z.patient_id] |= m.categories;
      if (m.warning) out.warnings.push_back(fmt::format("line {}: {}", z.line, *m.warning));
    } catch (const ValidationError& e) {
      diags.push_back({z.line, e.what()});
    }
  }
  if (!unknown.empty()) {
    throw ValidationError(fmt::format("Z-code patients absent from the corpus: {}",
                                      text::join(std::vector<std::string>(unknown.begin(), unknown.end()), ", ")));
  }
  if (!diags.empty()) throw ValidationError(format_diagnostics(diags, "zcodes"));
  out.model_vs_gold = evaluate(gold, model, Granularity::kPatient);
  out.zcode_vs_gold = evaluate(gold, out.zcode_labels, Granularity::kPatient);
  out.model_any = confusion(gold, model, EvalLabel::any_sdoh(), Granularity::kPatient);
  out.zcode_any = confusion(gold, out.zcode_labels, EvalLabel::any_sdoh(), Granularity::kPatient);
  return out;
}

// ---- file helpers ------------------------------------------------------------------

std::map<std::string, TaskLabels> parse_gold(std::string_view data, const std::string& source) {
  std::map<std::string, TaskLabels> out;
  std::vector<Diagnostic> diags;
  auto lines = io::parse_jsonl(data, [&](std::size_t l, const std::string& m) { diags.push_back({l, m}); });
  for (const auto& [line, obj] : lines) {
    try {
      std::string id = obj.at("sentence_id").get<std::string>();
      TaskLabels labels;
      if (obj.contains("labels")) {
        Annotation a;
        for (const auto& tok : obj["labels"]) {
          auto [c, attr] = parse_annotation_label(tok.get<std::string>());
          a.add(c, attr);
        }
        labels = project_both(a);
      } else if (obj.contains("any") || obj.contains("adverse")) {
        auto read = [&](const char* key) {
          CategorySet s;
          if (!obj.contains(key)) return s;
          for (const auto& tok : obj[key]) {
            auto c = category_from_canonical(text::upper(tok.get<std::string>()));
            if (!c) throw ValidationError(fmt::format("unknown category '{}'", tok.get<std::string>()));
            s.insert(*c);
          }
          return s;
        };
        labels.any = read("any");
        labels.adverse = read("adverse");
        if (!labels.adverse.is_subset_of(labels.any)) throw ValidationError("adverse labels must be a subset of any");
      } else {
        throw ValidationError("record needs 'labels' or 'any'/'adverse'");
      }
      if (!out.emplace(id, labels).second) throw ValidationError(fmt::format("duplicate sentence_id '{}'", id));
    } catch (const std::exception& e) {
      diags.push_back({line, e.what()});
    }
  }
  if (!diags.empty()) throw ValidationError(format_diagnostics(diags, source));
  return out;
}

std::map<std::string, TaskLabels> load_gold(const std::filesystem::path& path) {
  return parse_gold(io::read_file(path), path.string());
}

LabelMap project_gold(const std::map<std::string, TaskLabels>& gold, Task task) {
  LabelMap out;
  for (const auto& [id, l] : gold) out.emplace(id, l.for_task(task));
  return out;
}

LabelMap prediction_map(const std::vector<PredictionRecord>& preds, Task task) {
  LabelMap out;
  for (const auto& r : preds) {
    if (r.task != task) continue;
    if (!out.emplace(r.sentence_id, r.labels).second) {
      throw ValidationError(fmt::format("duplicate {} prediction for '{}'", to_string(task), r.sentence_id));
    }
  }
  return out;
}

}  // namespace sdoh
