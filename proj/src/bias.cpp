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

#include "sdoh/bias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "sdoh/io.hpp"
#include "sdoh/text.hpp"

namespace sdoh {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

std::string race_group(RaceEthnicity r) { return std::string(to_string(r)); }
std::string gender_group(Gender g) { return std::string(to_string(g)); }

BiasRow rate_row(const GroupRate& g, std::string_view group_prefix, Task task, const std::string& model) {
  BiasRow r;
  r.group = group_prefix.empty() ? g.group : fmt::format("{}:{}", group_prefix, g.group);
  r.task = std::string(to_string(task));
  r.model = model;
  r.mismatches = g.mismatches;
  r.pairs = g.pairs;
  r.rate = g.rate;
  return r;
}

std::vector<BiasRow> within_model(const ModelOutcomes& m, Task task, double alpha) {
  std::vector<BiasRow> rows;
  const std::string t(to_string(task));
  {
    auto groups = mismatch_rates(m.outcomes, GroupBy::kRaceEthnicity);
    BiasRow row;
    row.group = "race_ethnicity";
    row.task = t;
    row.model = m.model;
    row.test = "chi_squared";
    std::vector<std::vector<double>> table;
    for (const auto& g : groups) {
      if (g.group == "none") continue;
      row.mismatches += g.mismatches;
      row.pairs += g.pairs;
      table.push_back({static_cast<double>(g.mismatches), static_cast<double>(g.pairs - g.mismatches)});
    }
    row.rate = row.pairs ? static_cast<double>(row.mismatches) / static_cast<double>(row.pairs) : 0.0;
    try {
      auto chi = chi_squared(table);
      row.statistic = chi.statistic;
      row.p = chi.p;
      row.significant = chi.p <= alpha;
    } catch (const ValidationError& e) {
      spdlog::info("{} race/ethnicity chi-squared not computable: {}", m.model, e.what());
    }
    rows.push_back(row);
  }
  {
    auto groups = mismatch_rates(m.outcomes, GroupBy::kGender);
    const GroupRate* female = nullptr;
    const GroupRate* male = nullptr;
    for (const auto& g : groups) {
      if (g.group == "female") female = &g;
      if (g.group == "male") male = &g;
    }
    BiasRow row;
    row.group = "gender:female_vs_male";
    row.task = t;
    row.model = m.model;
    row.test = "two_proportion_z";
    if (female && male) {
      row.mismatches = female->mismatches + male->mismatches;
      row.pairs = female->pairs + male->pairs;
      row.rate = static_cast<double>(row.mismatches) / static_cast<double>(row.pairs);
      auto z = two_proportion_z(female->mismatches, female->pairs, male->mismatches, male->pairs);
      row.statistic = z.z;
      row.p = z.p;
      row.significant = !z.degenerate && z.p <= alpha;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<BiasRow> rate_rows(const ModelOutcomes& m, Task task) {
  std::vector<BiasRow> rows;
  for (GroupBy g : {GroupBy::kOverall, GroupBy::kRaceEthnicity, GroupBy::kGender, GroupBy::kGoldLabel}) {
    for (const auto& r : mismatch_rates(m.outcomes, g)) {
      rows.push_back(rate_row(r, g == GroupBy::kOverall ? "" : to_string(g), task, m.model));
    }
  }
  return rows;
}

}  // namespace

double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

double regularized_gamma_q(double a, double x) {
  if (!(a > 0)) throw std::domain_error("gamma shape must be positive");
  if (x < 0 || std::isnan(x)) throw std::domain_error("gamma argument must be non-negative");
  if (x == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_fraction(a, x), 0.0, 1.0);
}

double chi_squared_sf(double statistic, double df) {
  if (statistic <= 0) return 1.0;
  return regularized_gamma_q(df / 2.0, statistic / 2.0);
}

ZTest two_proportion_z(std::int64_t c1, std::int64_t n1, std::int64_t c2, std::int64_t n2) {
  if (n1 < 1 || n2 < 1) throw ValidationError("two-proportion test needs at least one unit per group");
  if (c1 < 0 || c2 < 0 || c1 > n1 || c2 > n2) throw ValidationError("counts must lie in [0, n]");
  const double p1 = static_cast<double>(c1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(c2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(c1 + c2) / static_cast<double>(n1 + n2);
  ZTest t;
  if (pooled <= 0.0 || pooled >= 1.0) {
    t.degenerate = true;
    return t;
  }
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  t.z = (p1 - p2) / se;
  t.p = normal_two_sided_p(t.z);
  return t;
}

ChiSquared chi_squared(const std::vector<std::vector<double>>& table) {
  const std::size_t r = table.size();
  if (r < 2) throw ValidationError("chi-squared needs at least two rows");
  const std::size_t c = table.front().size();
  if (c < 2) throw ValidationError("chi-squared needs at least two columns");
  std::vector<double> row(r, 0.0);
  std::vector<double> col(c, 0.0);
  double n = 0;
  for (std::size_t i = 0; i < r; ++i) {
    if (table[i].size() != c) throw ValidationError("chi-squared rows differ in length");
    for (std::size_t j = 0; j < c; ++j) {
      if (table[i][j] < 0) throw ValidationError("chi-squared counts must be non-negative");
      row[i] += table[i][j];
      col[j] += table[i][j];
      n += table[i][j];
    }
  }
  for (std::size_t i = 0; i < r; ++i)
    if (row[i] == 0) throw ValidationError(fmt::format("chi-squared row {} is empty", i + 1));
  for (std::size_t j = 0; j < c; ++j)
    if (col[j] == 0) throw ValidationError(fmt::format("chi-squared column {} is empty", j + 1));
  ChiSquared out;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double e = row[i] * col[j] / n;
      const double d = table[i][j] - e;
      out.statistic += d * d / e;
    }
  }
  out.df = static_cast<int>((r - 1) * (c - 1));
  out.p = chi_squared_sf(out.statistic, out.df);
  return out;
}

PairEvaluation evaluate_pairs(const std::vector<PairInput>& pairs, const BatchClassifier& classify) {
  std::vector<SentenceInput> inputs;
  inputs.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    inputs.push_back({p.pair_id + "/original", p.original_text});
    inputs.push_back({p.pair_id + "/injected", p.injected_text});
  }
  auto labels = classify(inputs);
  if (labels.size() != inputs.size()) throw ValidationError("classifier returned the wrong number of results");
  PairEvaluation out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& a = labels[2 * i];
    const auto& b = labels[2 * i + 1];
    if (!a || !b) {
      spdlog::warn("pair {} excluded: classification failed for {}", pairs[i].pair_id,
                   !a ? "the original" : "the injected sentence");
      out.excluded.push_back(pairs[i].pair_id);
      continue;
    }
    out.outcomes.push_back({pairs[i].pair_id, pairs[i].gold, *a, *b, *a != *b, pairs[i].descriptor});
  }
  return out;
}

std::vector<PairInput> pair_inputs(const std::vector<DemoPair>& pairs, const std::vector<SyntheticSentence>& originals,
                                   Task task, bool require_label) {
  std::map<std::string, const SyntheticSentence*> by_id;
  for (const auto& s : originals) by_id[s.id] = &s;
  std::vector<PairInput> out;
  for (const auto& p : pairs) {
    if (p.validated == Validation::kDiscarded) continue;
    auto it = by_id.find(p.original_id);
    if (it == by_id.end()) throw ValidationError(fmt::format("pair '{}' references unknown original '{}'", p.pair_id, p.original_id));
    if (it->second->validated == Validation::kDiscarded) continue;
    CategorySet gold = it->second->labels().for_task(task);
    if (require_label && gold.empty()) continue;
    out.push_back({p.pair_id, p.original_id, it->second->text, p.injected_text, gold, p.descriptor});
  }
  return out;
}

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::kOverall: return "overall";
    case GroupBy::kRaceEthnicity: return "race_ethnicity";
    case GroupBy::kGender: return "gender";
    case GroupBy::kGoldLabel: return "gold_label";
  }
  return "overall";
}

GroupBy parse_group_by(std::string_view s) {
  auto t = text::lower(text::trim(s));
  if (t == "overall") return GroupBy::kOverall;
  if (t == "race_ethnicity" || t == "race") return GroupBy::kRaceEthnicity;
  if (t == "gender") return GroupBy::kGender;
  if (t == "gold_label" || t == "label") return GroupBy::kGoldLabel;
  throw ValidationError(fmt::format("unknown group key '{}'", s));
}

std::vector<GroupRate> mismatch_rates(const std::vector<PairOutcome>& outcomes, GroupBy group_by) {
  if (outcomes.empty()) throw ValidationError("no pair outcomes to group");
  std::vector<std::string> order;
  std::map<std::string, GroupRate> groups;
  auto bump = [&](const std::string& key, bool mismatch) {
    auto& g = groups[key];
    g.group = key;
    ++g.pairs;
    if (mismatch) ++g.mismatches;
  };
  switch (group_by) {
    case GroupBy::kOverall:
      order = {"overall"};
      for (const auto& o : outcomes) bump("overall", o.mismatch);
      break;
    case GroupBy::kRaceEthnicity:
      for (auto r : {RaceEthnicity::kAsian, RaceEthnicity::kBlack, RaceEthnicity::kWhite, RaceEthnicity::kHispanic,
                     RaceEthnicity::kNone})
        order.push_back(race_group(r));
      for (const auto& o : outcomes) bump(race_group(o.descriptor.race_ethnicity), o.mismatch);
      break;
    case GroupBy::kGender:
      for (auto g : {Gender::kFemale, Gender::kMale, Gender::kNone}) order.push_back(gender_group(g));
      for (const auto& o : outcomes) bump(gender_group(o.descriptor.gender), o.mismatch);
      break;
    case GroupBy::kGoldLabel:
      for (Category c : kAllCategories) order.emplace_back(to_string(c));
      order.emplace_back("NO_SDOH");
      for (const auto& o : outcomes) {
        if (o.gold.empty()) bump("NO_SDOH", o.mismatch);
        for (Category c : o.gold.members()) bump(std::string(to_string(c)), o.mismatch);
      }
      break;
  }
  std::vector<GroupRate> out;
  for (const auto& key : order) {
    auto it = groups.find(key);
    if (it == groups.end()) continue;
    it->second.rate = static_cast<double>(it->second.mismatches) / static_cast<double>(it->second.pairs);
    out.push_back(it->second);
  }
  return out;
}

std::vector<BiasRow> single_model_report(const ModelOutcomes& a, Task task, double alpha) {
  auto rows = rate_rows(a, task);
  for (auto& r : within_model(a, task, alpha)) rows.push_back(std::move(r));
  return rows;
}

std::vector<BiasRow> significance_report(const ModelOutcomes& a, const ModelOutcomes& b, Task task, double alpha) {
  std::set<std::string> ids_a;
  std::set<std::string> ids_b;
  for (const auto& o : a.outcomes) ids_a.insert(o.pair_id);
  for (const auto& o : b.outcomes) ids_b.insert(o.pair_id);
  if (ids_a != ids_b) {
    throw ValidationError(fmt::format("models '{}' and '{}' were evaluated on different pairs", a.model, b.model));
  }
  auto rows = rate_rows(a, task);
  for (auto& r : rate_rows(b, task)) rows.push_back(std::move(r));

  const auto oa = mismatch_rates(a.outcomes, GroupBy::kOverall).front();
  const auto ob = mismatch_rates(b.outcomes, GroupBy::kOverall).front();
  BiasRow cmp;
  cmp.group = "overall";
  cmp.task = std::string(to_string(task));
  cmp.model = fmt::format("{} vs {}", a.model, b.model);
  cmp.mismatches = oa.mismatches + ob.mismatches;
  cmp.pairs = oa.pairs + ob.pairs;
  cmp.rate = static_cast<double>(cmp.mismatches) / static_cast<double>(cmp.pairs);
  cmp.test = "two_proportion_z";
  auto z = two_proportion_z(oa.mismatches, oa.pairs, ob.mismatches, ob.pairs);
  cmp.statistic = z.z;
  cmp.p = z.p;
  cmp.significant = !z.degenerate && z.p <= alpha;
  rows.push_back(cmp);

  for (auto& r : within_model(a, task, alpha)) rows.push_back(std::move(r));
  for (auto& r : within_model(b, task, alpha)) rows.push_back(std::move(r));
  return rows;
}

std::string bias_report_csv(const std::vector<BiasRow>& rows) {
  io::CsvWriter w({"group", "task", "model", "mismatches", "pairs", "rate", "test", "statistic", "p", "significant"});
  for (const auto& r : rows) {
    w.row({r.group, r.task, r.model, std::to_string(r.mismatches), std::to_string(r.pairs), io::fmt_fixed(r.rate),
           r.test, r.statistic ? io::fmt_fixed(*r.statistic) : "", r.p ? io::fmt_fixed(*r.p, 6) : "",
           r.test.empty() ? "" : (r.significant ? "true" : "false")});
  }
  return w.str();
}

}  // namespace sdoh
