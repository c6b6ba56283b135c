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

// Classification metrics, inter-annotator agreement, discrepancy ranking,
// ablation schedules and patient-level aggregation.

#ifndef SDOH_EVALKIT_HPP_
#define SDOH_EVALKIT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sdoh/classify.hpp"
#include "sdoh/corpus.hpp"
#include "sdoh/taxonomy.hpp"

namespace sdoh {

/// One-vs-rest label: a category, NO_SDOH (empty set) or ANY_SDOH
/// (non-empty set).
class EvalLabel {
 public:
  enum class Kind : std::uint8_t { kCategory, kNoSdoh, kAnySdoh };

  constexpr EvalLabel(Category c) : kind_(Kind::kCategory), category_(c) {}  // NOLINT
  static constexpr EvalLabel no_sdoh() { return EvalLabel(Kind::kNoSdoh); }
  static constexpr EvalLabel any_sdoh() { return EvalLabel(Kind::kAnySdoh); }

  Kind kind() const { return kind_; }
  Category category() const { return category_; }
  bool contained_in(CategorySet s) const;

  /// EMPLOYMENT, NO_SDOH, ANY_SDOH.
  std::string name() const;
  /// Employment, No SDoH, Any SDoH.
  std::string display() const;
  static EvalLabel parse(std::string_view s);

  bool operator==(const EvalLabel& o) const { return kind_ == o.kind_ && (kind_ != Kind::kCategory || category_ == o.category_); }
  /// Six categories in canonical order, then NO_SDOH, then ANY_SDOH.
  int order() const;
  bool operator<(const EvalLabel& o) const { return order() < o.order(); }

 private:
  constexpr explicit EvalLabel(Kind k) : kind_(k), category_(Category::kEmployment) {}
  Kind kind_;
  Category category_;
};

/// Six categories plus NO_SDOH in canonical order.
std::vector<EvalLabel> seven_labels();
/// NO_SDOH, then categories alphabetically by display name; report column
/// order.
std::vector<EvalLabel> report_label_order();

enum class Granularity : std::uint8_t { kSentence = 0, kPatient };
std::string_view to_string(Granularity g);

struct ConfusionCounts {
  EvalLabel label = EvalLabel::no_sdoh();
  Granularity granularity = Granularity::kSentence;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Unit id to label set.
using LabelMap = std::map<std::string, CategorySet>;

/// Throws ValidationError when the id sets differ, listing a few of the
/// mismatched ids.
void check_aligned(const LabelMap& gold, const LabelMap& pred);

ConfusionCounts confusion(const LabelMap& gold, const LabelMap& pred, EvalLabel label,
                          Granularity granularity = Granularity::kSentence);

/// Zero denominators give 0.
Metrics metrics(const ConfusionCounts& c);

/// Unweighted mean. Throws ValidationError on an empty list.
double macro_f1(std::span<const Metrics> per_label);
double macro_f1(std::span<const double> f1s);

struct LabelResult {
  ConfusionCounts counts;
  Metrics metrics;
};

struct EvalReport {
  std::vector<LabelResult> labels;  // seven labels, canonical order
  double macro_f1 = 0;              // seven-class mean
  double macro_f1_six = 0;          // categories only
  std::size_t units = 0;
};

EvalReport evaluate(const LabelMap& gold, const LabelMap& pred, Granularity granularity = Granularity::kSentence);

// ---- agreement -------------------------------------------------------------

/// (po - pe) / (1 - pe) with marginal-product pe; 1 when pe = 1. Values are
/// nominal codes. Throws ValidationError on length mismatch or empty input.
double cohen_kappa(std::span<const int> a, std::span<const int> b);

/// Nominal alpha from the coincidence matrix. Each unit lists the values it
/// received (missing values simply absent). Units with fewer than two values
/// are not pairable. Throws ValidationError when no unit is pairable. When
/// only one value occurs the expected disagreement is 0 and 1 is returned.
double krippendorff_alpha(const std::vector<std::vector<int>>& units);

struct AgreementRow {
  EvalLabel label = EvalLabel::no_sdoh();
  double alpha = 0;
  double kappa = 0;
  std::size_t units = 0;
};

struct AgreementReport {
  std::vector<AgreementRow> rows;  // seven labels
  /// Pooled over every (unit, label) binary decision.
  double overall_alpha = 0;
  double overall_kappa = 0;
};

/// Class-wise binary agreement between two coders over shared units.
AgreementReport agreement(const LabelMap& coder_a, const LabelMap& coder_b);

// ---- discrepancies ---------------------------------------------------------

struct DiscrepancyRow {
  EvalLabel gold = EvalLabel::no_sdoh();
  EvalLabel predicted = EvalLabel::no_sdoh();
  std::int64_t count = 0;
};

/// Per unit, every (gold-only, predicted-only) label pair, an empty set
/// standing for NO_SDOH. Sorted by descending count, then label order.
std::vector<DiscrepancyRow> discrepancy_table(const LabelMap& gold, const LabelMap& pred);

// ---- ablation --------------------------------------------------------------

inline constexpr std::array<int, 8> kPaperAblationPercents = {10, 25, 40, 50, 70, 75, 90, 100};

struct AblationExport {
  int percent = 0;
  bool with_synthetic = false;
  std::vector<TrainItem> items;
  std::size_t gold_positives = 0;
  std::size_t gold_negatives = 0;
  std::size_t synthetic = 0;
};

struct AblationRow {
  int percent = 0;
  bool with_synthetic = false;
  /// Filled in by whoever trains on the export; empty training sets are
  /// prefilled with zeros.
  std::optional<std::map<std::string, double>> f1;  // keyed by EvalLabel::name()
  std::optional<double> macro_f1;
};

struct AblationPlan {
  std::vector<AblationExport> exports;
  std::vector<AblationRow> report;
};

struct AblationOptions {
  std::vector<int> percents{kPaperAblationPercents.begin(), kPaperAblationPercents.end()};
  bool gold_only = true;
  bool with_synthetic = true;
  std::uint64_t seed = 0;
};

/// Removes floor(p% of positives) and floor(p% of negatives) per percent;
/// removal sets are nested across percents for one seed. Throws
/// ValidationError for percents outside 0..100, or for a with-synthetic
/// variant at 100% when the synthetic pool is empty.
AblationPlan ablation_schedule(const std::vector<TrainItem>& train, const std::vector<TrainItem>& synthetic_pool,
                               const AblationOptions& options);

// ---- patient level ---------------------------------------------------------

/// "note:index" -> "note". Ids without ':' are returned unchanged.
std::string note_of_sentence(std::string_view sentence_id);

/// Union of predicted labels for `task` per patient. Every patient in
/// `notes` appears, with an empty set when nothing was predicted. Throws
/// ValidationError for a sentence whose note is not in `notes`.
LabelMap patient_aggregate(const std::vector<PredictionRecord>& preds, Task task, const NoteCollection& notes);

/// Same union over a sentence-level label map.
LabelMap patient_aggregate(const LabelMap& sentence_labels, const NoteCollection& notes);

struct ZCodeRecord {
  std::string patient_id;
  std::string code;
  std::string date;
  std::size_t line = 0;
};

/// zcodes.csv: patient_id,code,date.
std::vector<ZCodeRecord> load_zcodes(const std::filesystem::path& path);
std::vector<ZCodeRecord> parse_zcodes(std::string_view csv, const std::string& source = "zcodes.csv");

struct PatientComparison {
  LabelMap zcode_labels;
  std::vector<std::string> warnings;
  EvalReport model_vs_gold;
  EvalReport zcode_vs_gold;
  ConfusionCounts model_any;  // ANY_SDOH rows
  ConfusionCounts zcode_any;
};

/// `gold` and `model` are adverse-task patient labels. Throws ValidationError when a Z-code
/// patient is absent from the gold universe or the maps are misaligned.
PatientComparison compare_zcodes(const LabelMap& gold, const LabelMap& model, const std::vector<ZCodeRecord>& zcodes,
                                 const ZCodeTable& table = ZCodeTable::defaults());

// ---- file helpers ----------------------------------------------------------

/// Gold annotations JSONL: {sentence_id, labels:[CATEGORY_attribute...]} or
/// {sentence_id, any:[...], adverse:[...]}.
std::map<std::string, TaskLabels> load_gold(const std::filesystem::path& path);
std::map<std::string, TaskLabels> parse_gold(std::string_view data, const std::string& source = "gold");

LabelMap project_gold(const std::map<std::string, TaskLabels>& gold, Task task);
/// Records of `task` keyed by sentence id; failed parses count as empty.
LabelMap prediction_map(const std::vector<PredictionRecord>& preds, Task task);

}  // namespace sdoh

#endif  // SDOH_EVALKIT_HPP_
