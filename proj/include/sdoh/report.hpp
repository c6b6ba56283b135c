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

// Report rendering (CSV, Markdown, SVG bar charts) and the locked output
// directory with its run manifest.

#ifndef SDOH_REPORT_HPP_
#define SDOH_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdoh/bias.hpp"
#include "sdoh/evalkit.hpp"

namespace sdoh::report {

/// Evaluation result of one model on one task.
struct ModelEval {
  std::string model;
  Task task = Task::kAny;
  EvalReport report;
};

/// label,precision,recall,f1 per task/model, plus a MACRO_F1 row
/// (seven-class) and a MACRO_F1_SIX row.
std::string metrics_csv(const std::vector<ModelEval>& evals);
std::string confusion_csv(const std::vector<ModelEval>& evals);

struct ModelDiscrepancies {
  std::string model;
  Task task = Task::kAny;
  std::vector<DiscrepancyRow> rows;
};
std::string discrepancies_csv(const std::vector<ModelDiscrepancies>& tables);

std::string agreement_csv(const AgreementReport& report);
std::string ablation_csv(Task task, const std::vector<AblationRow>& rows);

/// One table per task: Model | Macro-F1 | No SDoH | Employment | ...
std::string metrics_markdown(const std::vector<ModelEval>& evals);
/// Percent / variant rows with the same columns; unfilled cells are blank.
std::string ablation_markdown(Task task, const std::vector<AblationRow>& rows);
std::string bias_markdown(const std::vector<BiasRow>& rows);
std::string discrepancies_markdown(const std::vector<ModelDiscrepancies>& tables, std::size_t top = 10);

struct Series {
  std::string name;
  std::vector<double> values;  // one per category
};

/// Self-contained SVG grouped bar chart with values in [0, 1].
std::string svg_grouped_bars(std::string_view title, const std::vector<std::string>& categories,
                             const std::vector<Series>& series, std::string_view y_label = "");

/// Mismatch-rate chart grouped by race/ethnicity and gender, one bar per
/// model.
std::string bias_chart(const std::vector<BiasRow>& rows, Task task);

/// Per-label patient-level F1, model vs Z-codes.
std::string patient_chart(const PatientComparison& cmp);

/// Exclusive, atomically written output directory. A lock file guards
/// against concurrent runs; every write is recorded with its digest.
class OutputDir {
 public:
  /// Creates the directory and takes the lock. Throws IoError when another
  /// run holds it.
  explicit OutputDir(std::filesystem::path dir);
  ~OutputDir();
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  /// Throws ValidationError when `name` resolves to a protected path.
  void write(const std::string& name, std::string_view content);
  /// Marks an input file that no write may replace.
  void protect(const std::filesystem::path& input) { protected_.push_back(input); }
  const std::filesystem::path& path() const { return dir_; }
  const std::map<std::string, std::string>& outputs() const { return outputs_; }

 private:
  std::filesystem::path dir_;
  std::filesystem::path lock_;
  std::map<std::string, std::string> outputs_;  // name -> sha256
  std::vector<std::filesystem::path> protected_;
};

inline constexpr std::string_view kLockName = ".sdoh.lock";
inline constexpr std::string_view kManifestName = "manifest.json";

struct Manifest {
  std::string command;
  nlohmann::json config;  // resolved settings for the run
  std::uint64_t seed = 0;
  std::map<std::string, std::filesystem::path> inputs;  // role -> path
};

/// Writes manifest.json: tool version, command, config snapshot, seed,
/// input and output digests. Contains no timestamps.
void write_manifest(OutputDir& out, const Manifest& manifest);

inline constexpr std::string_view kToolVersion = "1.0.0";

}  // namespace sdoh::report

#endif  // SDOH_REPORT_HPP_
