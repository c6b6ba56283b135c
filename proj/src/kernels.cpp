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

#include "sdoh/kernels.hpp"

#include <array>
#include <exception>
#include <stdexcept>

#include <omp.h>

namespace sdoh::kernels {

namespace {

// cells[label][2 * gold + pred]: 0 = tn, 1 = fp, 2 = fn, 3 = tp.
using Cells = std::array<std::array<std::int64_t, 4>, 8>;

inline void tally_unit(Cells& c, std::uint8_t g, std::uint8_t p) {
  for (std::size_t k = 0; k < kNumCategories; ++k) ++c[k][2u * ((g >> k) & 1u) + ((p >> k) & 1u)];
  ++c[kNoSdohSlot][2u * (g == 0) + (p == 0)];
  ++c[kAnySdohSlot][2u * (g != 0) + (p != 0)];
}

CountTable to_table(const Cells& c) {
  CountTable t{};
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = {c[k][3], c[k][1], c[k][2], c[k][0]};
  return t;
}

void check_lengths(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred) {
  if (gold.size() != pred.size()) throw std::invalid_argument("gold and prediction arrays differ in length");
}

}  // namespace

CountTable count_confusion_serial(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred) {
  check_lengths(gold, pred);
  Cells c{};
  for (std::size_t i = 0; i < gold.size(); ++i) tally_unit(c, gold[i], pred[i]);
  return to_table(c);
}

CountTable count_confusion_parallel(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred) {
  check_lengths(gold, pred);
  Cells c{};
  const auto n = static_cast<std::int64_t>(gold.size());
#pragma omp parallel
  {
    Cells local{};
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) tally_unit(local, gold[i], pred[i]);
#pragma omp critical
    for (std::size_t k = 0; k < c.size(); ++k)
      for (std::size_t j = 0; j < 4; ++j) c[k][j] += local[k][j];
  }
  return to_table(c);
}

std::vector<NoteSegmentation> segment_notes_serial(std::span<const std::string_view> texts,
                                                   const SegmentOptions& options) {
  std::vector<NoteSegmentation> out;
  out.reserve(texts.size());
  for (auto t : texts) out.push_back(segment_note(t, options));
  return out;
}

std::vector<NoteSegmentation> segment_notes_parallel(std::span<const std::string_view> texts,
                                                     const SegmentOptions& options) {
  std::vector<NoteSegmentation> out(texts.size());
  std::exception_ptr error;
  const auto n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = segment_note(texts[i], options);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<TaskLabels> classify_lexicon_serial(const LexiconRules& rules, std::span<const std::string> sentences) {
  std::vector<TaskLabels> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(classify_lexicon(rules, s));
  return out;
}

std::vector<TaskLabels> classify_lexicon_parallel(const LexiconRules& rules, std::span<const std::string> sentences) {
  std::vector<TaskLabels> out(sentences.size());
  const auto n = static_cast<std::int64_t>(sentences.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) out[i] = classify_lexicon(rules, sentences[i]);
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace sdoh::kernels
