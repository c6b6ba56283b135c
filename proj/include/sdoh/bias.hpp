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

// Prediction stability under demographic injection, and the proportion
// tests used to compare mismatch rates.

#ifndef SDOH_BIAS_HPP_
#define SDOH_BIAS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdoh/classify.hpp"
#include "sdoh/synthgen.hpp"
#include "sdoh/taxonomy.hpp"

namespace sdoh {

// ---- statistics --------------------------------------------------------------

/// Two-sided standard normal tail, erfc(|z| / sqrt 2).
double normal_two_sided_p(double z);

/// Regularized upper incomplete gamma Q(a, x) by series (x < a + 1) or
/// continued fraction. Throws std::domain_error for a <= 0 or x < 0.
double regularized_gamma_q(double a, double x);

/// Chi-squared survival function.
double chi_squared_sf(double statistic, double df);

struct ZTest {
  double z = 0;
  double p = 1;
  /// Pooled proportion was 0 or 1; z = 0 and p = 1.
  bool degenerate = false;
};

/// Pooled-variance two-proportion z-test, (p1 - p2) / se. Throws
/// ValidationError unless 1 <= n and 0 <= c <= n for both groups.
ZTest two_proportion_z(std::int64_t c1, std::int64_t n1, std::int64_t c2, std::int64_t n2);

struct ChiSquared {
  double statistic = 0;
  int df = 0;
  double p = 1;
};

/// Pearson statistic without continuity correction. Throws ValidationError
/// for fewer than two rows or columns, negative counts or an empty row or
/// column.
ChiSquared chi_squared(const std::vector<std::vector<double>>& table);

// ---- pair evaluation -----------------------------------------------------------

struct PairInput {
  std::string pair_id;
  std::string original_id;
  std::string original_text;
  std::string injected_text;
  CategorySet gold;  // for the evaluated task
  Descriptor descriptor;
};

struct PairOutcome {
  std::string pair_id;
  CategorySet gold;
  CategorySet pred_original;
  CategorySet pred_injected;
  bool mismatch = false;
  Descriptor descriptor;
};

/// Labels for each input sentence in order; nullopt marks a backend failure.
using BatchClassifier = std::function<std::vector<std::optional<CategorySet>>(const std::vector<SentenceInput>&)>;

struct PairEvaluation {
  std::vector<PairOutcome> outcomes;
  std::vector<std::string> excluded;  // pair ids with a failed member
};

/// Classifies both members of every pair with the same classifier and
/// compares label sets. Sentence ids are "<pair_id>/original" and
/// "<pair_id>/injected".
PairEvaluation evaluate_pairs(const std::vector<PairInput>& pairs, const BatchClassifier& classify);

/// Joins validated pairs with their originals, keeping pairs whose original
/// carries a label for `task` (all pairs when `require_label` is false).
std::vector<PairInput> pair_inputs(const std::vector<DemoPair>& pairs, const std::vector<SyntheticSentence>& originals,
                                   Task task, bool require_label = true);

enum class GroupBy : std::uint8_t { kOverall = 0, kRaceEthnicity, kGender, kGoldLabel };

std::string_view to_string(GroupBy g);
/// Throws ValidationError for an unknown key.
GroupBy parse_group_by(std::string_view s);

struct GroupRate {
  std::string group;
  std::int64_t mismatches = 0;
  std::int64_t pairs = 0;
  double rate = 0;
};

/// Mismatch rate per group in a fixed group order; gold_label counts a pair
/// once per gold label (NO_SDOH when it has none). Throws ValidationError on
/// empty outcomes.
std::vector<GroupRate> mismatch_rates(const std::vector<PairOutcome>& outcomes, GroupBy group_by);

struct BiasRow {
  std::string group;
  std::string task;
  std::string model;
  std::int64_t mismatches = 0;
  std::int64_t pairs = 0;
  double rate = 0;
  std::string test;  // empty for plain rate rows
  std::optional<double> statistic;
  std::optional<double> p;
  bool significant = false;
};

struct ModelOutcomes {
  std::string model;
  std::vector<PairOutcome> outcomes;
};

/// Rate rows for every grouping of both models, then: the overall A-vs-B
/// two-proportion test, a chi-squared test across race/ethnicity groups and
/// a female-vs-male z-test within each model. Tests that cannot be computed
/// (empty rows or columns) are reported without a p-value. Throws
/// ValidationError when the two models were evaluated on different pairs.
std::vector<BiasRow> significance_report(const ModelOutcomes& a, const ModelOutcomes& b, Task task,
                                         double alpha = 0.05);

/// Rate and within-model rows for a single model.
std::vector<BiasRow> single_model_report(const ModelOutcomes& a, Task task, double alpha = 0.05);

/// bias_report.csv: group,task,model,mismatches,pairs,rate,test,statistic,p,significant
std::string bias_report_csv(const std::vector<BiasRow>& rows);

}  // namespace sdoh

#endif  // SDOH_BIAS_HPP_
