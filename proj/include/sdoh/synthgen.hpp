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

// Synthetic sentence generation (two prompting rounds), demographic
// injection pairing and file-driven manual validation.

#ifndef SDOH_SYNTHGEN_HPP_
#define SDOH_SYNTHGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdoh/error.hpp"
#include "sdoh/remote.hpp"
#include "sdoh/taxonomy.hpp"

namespace sdoh {

enum class Validation : std::uint8_t { kUnreviewed = 0, kConfirmed, kCorrected, kDiscarded };

std::string_view to_string(Validation v);
Validation parse_validation(std::string_view s);

struct SyntheticSentence {
  std::string id;
  std::string text;
  Category category = Category::kEmployment;
  bool adverse = false;
  int round = 1;
  std::string batch_id;
  /// Round-1 batch whose outputs served as references (round 2 only).
  std::optional<std::string> reference_batch;
  Validation validated = Validation::kUnreviewed;
  std::optional<Annotation> corrected;

  /// Labels implied by the generating prompt unless corrected.
  TaskLabels labels() const;
};

nlohmann::json to_json(const SyntheticSentence& s);
SyntheticSentence synthetic_from_json(const nlohmann::json& j);

std::vector<SyntheticSentence> load_synthetic(const std::filesystem::path& path);
std::string synthetic_to_jsonl(const std::vector<SyntheticSentence>& items);

// ---- generation prompts --------------------------------------------------

struct GenerationPrompt {
  Category category;
  bool adverse;
  std::string label;  // "Housing-Adverse"
  std::string intro;  // "Examples of housing issues for patients:"
  std::string topic;  // "patient's housing issues"
  /// Shipped example list exactly as it follows the intro.
  std::string shipped_examples;
};

/// The nine shipped round-1 prompts.
const std::vector<GenerationPrompt>& shipped_generation_prompts();
/// Throws ValidationError for a combination without a shipped prompt.
const GenerationPrompt& generation_prompt_for(Category category, bool adverse);

/// Shipped round-1 message sequence; `n` replaces the requested count.
std::vector<ChatMessage> build_shipped_generation_prompt(Category category, bool adverse, int n = 100);

/// Same structure with `references` as the numbered example list
/// ("1. a\n2. b"). Throws ValidationError when references is empty.
std::vector<ChatMessage> build_generation_prompt(Category category, bool adverse,
                                                 const std::vector<std::string>& references, int n = 100);

/// Splits a list response into sentences, dropping enumeration ("12.",
/// "3)", "-", "*") and blank lines.
std::vector<std::string> parse_generated_list(std::string_view response);

struct GenerationJob {
  Category category;
  bool adverse;
  /// Empty: the shipped examples (round 1).
  std::vector<std::string> references;
  std::optional<std::string> reference_batch;
};

struct GenerationOptions {
  int n_per_category = 100;
  int round = 1;
  /// Upper bound on requests per job while topping up to n.
  int max_requests = 5;
};

std::string generation_batch_id(int round, Category category, bool adverse);

/// Runs every job, re-requesting until n unique sentences are collected or
/// max_requests is reached. Duplicates are dropped within a category.
/// Throws TransportError when the backend fails after its retries.
std::vector<SyntheticSentence> run_generation_round(ChatClient& client, const std::vector<GenerationJob>& jobs,
                                                    const GenerationOptions& options);

/// Round-2 jobs: round-1 outputs of each (category, adverse) batch become
/// the references, at most `max_references` per job.
std::vector<GenerationJob> round_two_jobs(const std::vector<SyntheticSentence>& round_one,
                                          std::size_t max_references = 10);

// ---- demographic injection -----------------------------------------------

enum class RaceEthnicity : std::uint8_t { kNone = 0, kAsian, kBlack, kWhite, kHispanic };
enum class Gender : std::uint8_t { kNone = 0, kMale, kFemale };

std::string_view to_string(RaceEthnicity r);
std::string_view to_string(Gender g);
RaceEthnicity parse_race_ethnicity(std::string_view s);
Gender parse_gender(std::string_view s);

struct Descriptor {
  RaceEthnicity race_ethnicity = RaceEthnicity::kNone;
  Gender gender = Gender::kNone;
  bool operator==(const Descriptor&) const = default;
};

struct DemoPair {
  std::string pair_id;
  std::string original_id;
  std::string injected_text;
  Descriptor descriptor;
  Validation validated = Validation::kUnreviewed;
};

nlohmann::json to_json(const DemoPair& p);
DemoPair demo_pair_from_json(const nlohmann::json& j);
std::vector<DemoPair> load_demo_pairs(const std::filesystem::path& path);
std::string demo_pairs_to_jsonl(const std::vector<DemoPair>& pairs);

inline constexpr std::size_t kDefaultInjectionBatch = 10;

/// One user message: the originals one per line followed by the injection
/// instruction and its worked example. Throws ValidationError on an empty
/// batch.
std::vector<ChatMessage> build_demo_injection_prompt(const std::vector<std::string>& originals);

/// Consecutive batches of at most batch_size.
std::vector<std::vector<std::size_t>> injection_batches(std::size_t n, std::size_t batch_size = kDefaultInjectionBatch);

struct DemoLine {
  Descriptor descriptor;
  std::string injected_text;
  std::vector<std::string> warnings;  // unknown tag tokens
};

/// "[Asian female] text" -> ({Asian, female}, "text"). Throws ValidationError
/// when the line has no leading bracket tag.
DemoLine parse_demo_output(std::string_view line);
std::string render_demo_line(const Descriptor& d, std::string_view text);

struct DemoBatchResult {
  std::vector<DemoPair> pairs;
  std::vector<Diagnostic> diagnostics;
};

/// Pairs the tagged lines of one response with the batch originals in
/// order. A count mismatch rejects the batch.
DemoBatchResult parse_demo_batch(std::string_view response, const std::vector<const SyntheticSentence*>& originals,
                                 std::size_t first_pair_index);

/// Injects demographics into every sentence, batch by batch.
DemoBatchResult run_demo_injection(ChatClient& client, const std::vector<SyntheticSentence>& sentences,
                                   std::size_t batch_size = kDefaultInjectionBatch);

// ---- validation ----------------------------------------------------------

struct Decision {
  std::string id;
  Validation decision = Validation::kConfirmed;
  std::optional<Annotation> corrected;
  std::size_t line = 0;
};

/// decisions.csv: id,decision,corrected_labels where corrected_labels is a
/// '|'-separated list of CATEGORY_attribute tokens. Throws ValidationError
/// with line-numbered diagnostics.
std::vector<Decision> parse_decisions(std::string_view csv, const std::string& source = "decisions.csv");
std::vector<Decision> load_decisions(const std::filesystem::path& path);

struct AuditEntry {
  std::string id;
  Validation previous;
  Validation decision;
  std::string labels_before;
  std::string labels_after;
};

struct ValidationSummary {
  std::size_t generated = 0;
  std::size_t confirmed = 0;
  std::size_t corrected = 0;
  std::size_t discarded = 0;
  std::size_t unreviewed = 0;
  /// Reviewed, kept items with a non-empty label set for each task.
  std::size_t any_task = 0;
  std::size_t adverse_task = 0;
};

template <typename Item>
struct Validated {
  std::vector<Item> items;  // every item with its decision applied
  std::vector<AuditEntry> audit;
  ValidationSummary summary;

  /// Confirmed and corrected items only.
  std::vector<Item> kept() const;
};

/// Applies decisions without touching the input. Decisions naming unknown
/// ids raise ValidationError listing them.
Validated<SyntheticSentence> record_validation(const std::vector<SyntheticSentence>& items,
                                               const std::vector<Decision>& decisions);

/// For pairs the task counts use the original sentence's labels.
Validated<DemoPair> record_validation(const std::vector<DemoPair>& pairs, const std::vector<Decision>& decisions,
                                      const std::vector<SyntheticSentence>& originals);

std::string audit_to_csv(const std::vector<AuditEntry>& audit);

}  // namespace sdoh

#endif  // SDOH_SYNTHGEN_HPP_
