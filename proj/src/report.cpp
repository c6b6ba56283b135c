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

#include "sdoh/report.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <fmt/format.h>

#include "sdoh/io.hpp"
#include "sdoh/text.hpp"

namespace sdoh::report {

namespace {

using json = nlohmann::json;
using io::fmt_fixed;

std::string md_row(const std::vector<std::string>& cells) { return "| " + text::join(cells, " | ") + " |\n"; }

std::string md_rule(std::size_t n) {
  std::vector<std::string> cells(n, "---");
  return md_row(cells);
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> label_columns() {
  std::vector<std::string> cols;
  for (const auto& l : report_label_order()) cols.push_back(l.display());
  return cols;
}

const LabelResult& result_for(const EvalReport& r, EvalLabel l) {
  for (const auto& lr : r.labels)
    if (lr.counts.label == l) return lr;
  throw ValidationError(fmt::format("report lacks label {}", l.name()));
}

constexpr std::array<const char*, 6> kPalette = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"};

}  // namespace

std::string metrics_csv(const std::vector<ModelEval>& evals) {
  io::CsvWriter w({"task", "model", "granularity", "label", "precision", "recall", "f1"});
  for (const auto& e : evals) {
    const std::string task(to_string(e.task));
    for (const auto& lr : e.report.labels) {
      w.row({task, e.model, std::string(to_string(lr.counts.granularity)), lr.counts.label.name(),
             fmt_fixed(lr.metrics.precision), fmt_fixed(lr.metrics.recall), fmt_fixed(lr.metrics.f1)});
    }
    const std::string gran = e.report.labels.empty() ? "sentence" : std::string(to_string(e.report.labels[0].counts.granularity));
    w.row({task, e.model, gran, "MACRO_F1", "", "", fmt_fixed(e.report.macro_f1)});
    w.row({task, e.model, gran, "MACRO_F1_SIX", "", "", fmt_fixed(e.report.macro_f1_six)});
  }
  return w.str();
}

std::string confusion_csv(const std::vector<ModelEval>& evals) {
  io::CsvWriter w({"task", "model", "granularity", "label", "tp", "fp", "fn", "tn"});
  for (const auto& e : evals) {
    for (const auto& lr : e.report.labels) {
      const auto& c = lr.counts;
      w.row({std::string(to_string(e.task)), e.model, std::string(to_string(c.granularity)), c.label.name(),
             std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.fn), std::to_string(c.tn)});
    }
  }
  return w.str();
}

std::string discrepancies_csv(const std::vector<ModelDiscrepancies>& tables) {
  io::CsvWriter w({"task", "model", "rank", "gold", "predicted", "count"});
  for (const auto& t : tables) {
    std::size_t rank = 0;
    for (const auto& r : t.rows) {
      w.row({std::string(to_string(t.task)), t.model, std::to_string(++rank), r.gold.display(), r.predicted.display(),
             std::to_string(r.count)});
    }
  }
  return w.str();
}

std::string agreement_csv(const AgreementReport& report) {
  io::CsvWriter w({"label", "krippendorff_alpha", "cohen_kappa", "units"});
  for (const auto& r : report.rows) {
    w.row({r.label.name(), fmt_fixed(r.alpha), fmt_fixed(r.kappa), std::to_string(r.units)});
  }
  if (!report.rows.empty()) {
    w.row({"OVERALL", fmt_fixed(report.overall_alpha), fmt_fixed(report.overall_kappa),
           std::to_string(report.rows.front().units * report.rows.size())});
  }
  return w.str();
}

std::string ablation_csv(Task task, const std::vector<AblationRow>& rows) {
  std::vector<std::string> header{"task", "percent_removed", "variant", "macro_f1"};
  for (const auto& l : report_label_order()) header.push_back(text::lower(l.name()));
  io::CsvWriter w(header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{std::string(to_string(task)), std::to_string(r.percent),
                                   r.with_synthetic ? "gold+synthetic" : "gold_only",
                                   r.macro_f1 ? fmt_fixed(*r.macro_f1, 3) : ""};
    for (const auto& l : report_label_order()) {
      std::string cell;
      if (r.f1) {
        auto it = r.f1->find(l.name());
        if (it != r.f1->end()) cell = fmt_fixed(it->second, 3);
      }
      cells.push_back(cell);
    }
    w.row(cells);
  }
  return w.str();
}

std::string metrics_markdown(const std::vector<ModelEval>& evals) {
  std::string out;
  for (Task task : kAllTasks) {
    std::vector<const ModelEval*> mine;
    for (const auto& e : evals)
      if (e.task == task) mine.push_back(&e);
    if (mine.empty()) continue;
    out += fmt::format("## {} SDoH\n\n", task == Task::kAny ? "Any" : "Adverse");
    std::vector<std::string> header{"Model", "Macro-F1"};
    for (const auto& c : label_columns()) header.push_back(c);
    out += md_row(header) + md_rule(header.size());
    for (const auto* e : mine) {
      std::vector<std::string> cells{e->model, fmt_fixed(e->report.macro_f1, 2)};
      for (const auto& l : report_label_order()) cells.push_back(fmt_fixed(result_for(e->report, l).metrics.f1, 2));
      out += md_row(cells);
    }
    out += "\n";
  }
  return out;
}

std::string ablation_markdown(Task task, const std::vector<AblationRow>& rows) {
  std::string out = fmt::format("## {} SDoH ablation\n\n", task == Task::kAny ? "Any" : "Adverse");
  std::vector<std::string> header{"Percent removed", "Training data", "Macro-F1"};
  for (const auto& c : label_columns()) header.push_back(c);
  out += md_row(header) + md_rule(header.size());
  for (const auto& r : rows) {
    std::vector<std::string> cells{fmt::format("{}%", r.percent), r.with_synthetic ? "Gold + synthetic data" : "Gold data only",
                                   r.macro_f1 ? fmt_fixed(*r.macro_f1, 3) : ""};
    for (const auto& l : report_label_order()) {
      std::string cell;
      if (r.f1) {
        auto it = r.f1->find(l.name());
        if (it != r.f1->end()) cell = fmt_fixed(it->second, 3);
      }
      cells.push_back(cell);
    }
    out += md_row(cells);
  }
  return out + "\n";
}

std::string bias_markdown(const std::vector<BiasRow>& rows) {
  std::string out = "## Demographic injection mismatches\n\n";
  std::vector<std::string> header{"Group", "Task", "Model", "Mismatches", "Pairs", "Rate", "Test", "Statistic", "P", "Significant"};
  out += md_row(header) + md_rule(header.size());
  for (const auto& r : rows) {
    out += md_row({r.group, r.task, r.model, std::to_string(r.mismatches), std::to_string(r.pairs), fmt_fixed(r.rate, 3),
                   r.test, r.statistic ? fmt_fixed(*r.statistic, 3) : "", r.p ? fmt_fixed(*r.p, 4) : "",
                   r.test.empty() ? "" : (r.significant ? "yes" : "no")});
  }
  return out + "\n";
}

std::string discrepancies_markdown(const std::vector<ModelDiscrepancies>& tables, std::size_t top) {
  std::string out;
  for (const auto& t : tables) {
    out += fmt::format("## Most common discrepancies: {} ({})\n\n", t.model, to_string(t.task));
    out += md_row({"Ground truth", "Prediction", "Count"}) + md_rule(3);
    for (std::size_t i = 0; i < std::min(top, t.rows.size()); ++i) {
      out += md_row({t.rows[i].gold.display(), t.rows[i].predicted.display(), std::to_string(t.rows[i].count)});
    }
    out += "\n";
  }
  return out;
}

std::string svg_grouped_bars(std::string_view title, const std::vector<std::string>& categories,
                             const std::vector<Series>& series, std::string_view y_label) {
  constexpr double kLeft = 60;
  constexpr double kTop = 40;
  constexpr double kPlotH = 240;
  constexpr double kBottom = 70;
  const double group_w = std::max<double>(60.0, 22.0 * static_cast<double>(std::max<std::size_t>(series.size(), 1)) + 20);
  const double width = kLeft + group_w * static_cast<double>(std::max<std::size_t>(categories.size(), 1)) + 160;
  const double height = kTop + kPlotH + kBottom;
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height, width, height);
  s += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", width, height);
  s += fmt::format("<text x=\"{:.0f}\" y=\"20\" font-size=\"14\">{}</text>\n", kLeft, xml_escape(title));
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    const double y = kTop + kPlotH * (1 - v);
    s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#dddddd\"/>\n", kLeft, y,
                     width - 150, y);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", kLeft - 6, y + 4, v);
  }
  if (!y_label.empty()) {
    s += fmt::format("<text x=\"14\" y=\"{:.1f}\" transform=\"rotate(-90 14 {:.1f})\" text-anchor=\"middle\">{}</text>\n",
                     kTop + kPlotH / 2, kTop + kPlotH / 2, xml_escape(y_label));
  }
  const double bar_w = series.empty() ? 0 : (group_w - 20) / static_cast<double>(series.size());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + group_w * static_cast<double>(c) + 10;
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double v = c < series[k].values.size() ? std::clamp(series[k].values[c], 0.0, 1.0) : 0.0;
      const double h = kPlotH * v;
      s += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"><title>{}: {:.3f}</title></rect>\n",
          gx + bar_w * static_cast<double>(k), kTop + kPlotH - h, bar_w - 2, h, kPalette[k % kPalette.size()],
          xml_escape(series[k].name), v);
    }
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", gx + (group_w - 20) / 2,
                     kTop + kPlotH + 16, xml_escape(categories[c]));
  }
  s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n", kLeft,
                   kTop + kPlotH, width - 150, kTop + kPlotH);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = kTop + 14.0 * static_cast<double>(k);
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", width - 140, y,
                     kPalette[k % kPalette.size()]);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", width - 125, y + 9, xml_escape(series[k].name));
  }
  s += "</svg>\n";
  return s;
}

std::string bias_chart(const std::vector<BiasRow>& rows, Task task) {
  std::vector<std::string> categories;
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, double> value;
  for (const auto& r : rows) {
    if (!r.test.empty() || r.task != to_string(task)) continue;
    const bool race = r.group.rfind("race_ethnicity:", 0) == 0;
    const bool gender = r.group.rfind("gender:", 0) == 0;
    if (!race && !gender) continue;
    std::string cat = r.group.substr(r.group.find(':') + 1);
    if (cat == "none") continue;
    if (std::find(categories.begin(), categories.end(), cat) == categories.end()) categories.push_back(cat);
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    value[{r.model, cat}] = r.rate;
  }
  std::vector<Series> series;
  for (const auto& m : models) {
    Series s{m, {}};
    for (const auto& c : categories) {
      auto it = value.find({m, c});
      s.values.push_back(it == value.end() ? 0.0 : it->second);
    }
    series.push_back(std::move(s));
  }
  return svg_grouped_bars(fmt::format("Mismatch rate after demographic injection ({} SDoH)", to_string(task)),
                          categories, series, "mismatch rate");
}

std::string patient_chart(const PatientComparison& cmp) {
  std::vector<std::string> categories;
  Series model{"model", {}};
  Series zcode{"Z-codes", {}};
  for (const auto& l : report_label_order()) {
    if (l == EvalLabel::no_sdoh()) continue;
    categories.push_back(l.display());
    model.values.push_back(result_for(cmp.model_vs_gold, l).metrics.f1);
    zcode.values.push_back(result_for(cmp.zcode_vs_gold, l).metrics.f1);
  }
  categories.push_back("Any SDoH");
  model.values.push_back(metrics(cmp.model_any).f1);
  zcode.values.push_back(metrics(cmp.zcode_any).f1);
  return svg_grouped_bars("Patient-level adverse SDoH F1 against gold labels", categories, {model, zcode}, "F1");
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", dir_.string(), ec.message()));
  lock_ = dir_ / std::string(kLockName);
  const int fd = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw IoError(fmt::format("output directory {} is locked by another run (remove {} if stale)", dir_.string(),
                                lock_.string()));
    }
    throw IoError(fmt::format("cannot lock {}: {}", dir_.string(), std::strerror(errno)));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputDir::~OutputDir() {
  std::error_code ec;
  std::filesystem::remove(lock_, ec);
}

void OutputDir::write(const std::string& name, std::string_view content) {
  const auto target = dir_ / name;
  for (const auto& input : protected_) {
    std::error_code ec;
    if (std::filesystem::equivalent(input, target, ec)) {
      throw ValidationError(fmt::format("output {} would overwrite input {}; choose another output directory",
                                        target.string(), input.string()));
    }
  }
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  io::write_file_atomic(target, content);
  outputs_[name] = io::sha256_hex(content);
}

void write_manifest(OutputDir& out, const Manifest& manifest) {
  json inputs = json::object();
  for (const auto& [role, path] : manifest.inputs) {
    json entry = {{"path", path.string()}};
    if (std::filesystem::is_regular_file(path)) entry["sha256"] = io::sha256_file(path);
    inputs[role] = entry;
  }
  json outputs = json::object();
  for (const auto& [name, digest] : out.outputs()) outputs[name] = digest;
  json m = {{"tool", "sdoh"},
            {"version", std::string(kToolVersion)},
            {"command", manifest.command},
            {"seed", manifest.seed},
            {"config", manifest.config},
            {"inputs", inputs},
            {"outputs", outputs}};
  io::write_file_atomic(out.path() / std::string(kManifestName), m.dump(2) + "\n");
}

}  // namespace sdoh::report
