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

// Classifier front ends: chat prompt rendering and response parsing, the
// keyword lexicon baseline, imported prediction files and training-export
// undersampling. The remote chat backend lives in remote.hpp.

#ifndef SDOH_CLASSIFY_HPP_
#define SDOH_CLASSIFY_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdoh/error.hpp"
#include "sdoh/taxonomy.hpp"

namespace sdoh {

enum class Backend : std::uint8_t { kLexicon = 0, kRemote, kImported };
enum class ParseStatus : std::uint8_t { kOk = 0, kSalvaged, kFailed };

std::string_view to_string(Backend b);
std::string_view to_string(ParseStatus s);
Backend parse_backend(std::string_view s);
ParseStatus parse_parse_status(std::string_view s);

/// A sentence handed to a classifier.
struct SentenceInput {
  std::string id;
  std::string text;
};

struct PredictionRecord {
  std::string sentence_id;
  Task task = Task::kAny;
  CategorySet labels;
  std::string model_id;
  Backend backend = Backend::kLexicon;
  std::optional<std::string> raw_response;
  ParseStatus parse_status = ParseStatus::kOk;
  std::optional<std::string> error;
  int retries = 0;
};

nlohmann::json to_json(const PredictionRecord& r);

/// Token that stands for the negative class when include_negative is on.
inline constexpr std::string_view kNoSdohToken = "NO_SDOH";

struct Exemplar {
  std::string text;
  CategorySet labels;
};

struct PromptOptions {
  /// Appends NO_SDOH to the category list (corpus runs); off for the
  /// synthetic evaluation, which has no negative class.
  bool include_negative = false;
};

struct Prompt {
  std::string text;
  /// True when a triple backtick in the input had to be collapsed.
  bool escaped = false;
};

/// ['EMPLOYMENT', 'HOUSING', ...]
std::string render_label_list(const std::vector<Category>& labels, const PromptOptions& options = {});

/// Zero-shot classification prompt. Throws ValidationError for an empty
/// label list or blank sentence.
Prompt build_zero_shot_prompt(const std::vector<Category>& labels, std::string_view sentence,
                              const PromptOptions& options = {});

/// Same prompt with a "Training data:" block of Sample input / Sample target
/// pairs, in exemplar order. Throws ValidationError for zero exemplars or an
/// exemplar without labels.
Prompt build_few_shot_prompt(const std::vector<Category>& labels, const std::vector<Exemplar>& exemplars,
                             std::string_view sentence, const PromptOptions& options = {});

struct ParsedResponse {
  CategorySet labels;
  ParseStatus status = ParseStatus::kFailed;
  std::vector<std::string> unmapped_tokens;
};

/// Reads the first JSON object in the response and its "label" value (a
/// token or a list of tokens). Never throws.
ParsedResponse parse_model_response(std::string_view raw, const AliasTable& aliases = AliasTable::defaults());

struct LexiconRule {
  std::string keyword;  // matched case-insensitively as a substring
  Category category;
  bool adverse = false;
};

class LexiconRules {
 public:
  /// Starter rules ("lives alone" -> SUPPORT adverse, "retired" ->
  /// EMPLOYMENT, "widowed" -> RELATIONSHIP adverse, ...).
  static LexiconRules defaults();
  /// CSV keyword,category,adverse (adverse is true/false or 1/0).
  static LexiconRules load_csv(const std::filesystem::path& path);

  void add(LexiconRule rule);
  const std::vector<LexiconRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

 private:
  std::vector<LexiconRule> rules_;  // keywords stored lower-cased
};

/// Union of matched categories for both tasks. adverse is a subset of any.
TaskLabels classify_lexicon(const LexiconRules& rules, std::string_view sentence);

/// One sentence with its gold labels for a single task.
struct TrainItem {
  std::string sentence_id;
  std::string text;
  CategorySet gold;
  bool synthetic = false;

  bool positive() const { return !gold.empty(); }
  bool operator==(const TrainItem&) const = default;
};

nlohmann::json to_json(const TrainItem& item, Task task);

/// Keeps every positive and min(available, floor(ratio * positives))
/// negatives drawn without replacement; input order is preserved. Throws
/// ValidationError when ratio <= 0 or there are no positives.
std::vector<TrainItem> undersample_negatives(const std::vector<TrainItem>& items, double ratio, std::uint64_t seed);

struct ImportResult {
  std::vector<PredictionRecord> records;
  std::vector<Diagnostic> diagnostics;  // unmapped tokens, malformed lines
};

/// Reads predictions.jsonl ({sentence_id, task, labels, model_id}). When
/// `known_ids` is given, ids absent from it raise ValidationError listing
/// them.
ImportResult import_predictions(const std::filesystem::path& path, const std::set<std::string>* known_ids = nullptr,
                                const AliasTable& aliases = AliasTable::defaults());
ImportResult parse_predictions(std::string_view data, const std::set<std::string>* known_ids = nullptr,
                               const AliasTable& aliases = AliasTable::defaults());

}  // namespace sdoh

#endif  // SDOH_CLASSIFY_HPP_
