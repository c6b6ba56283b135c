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

// Batch kernels with an OpenMP version and a serial reference. Both produce
// identical results in input order.

#ifndef SDOH_KERNELS_HPP_
#define SDOH_KERNELS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdoh/classify.hpp"
#include "sdoh/segment.hpp"

namespace sdoh::kernels {

struct LabelCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  bool operator==(const LabelCounts&) const = default;
};

/// Slots 0-5 follow the category order, 6 is NO_SDOH, 7 is ANY_SDOH.
inline constexpr std::size_t kNoSdohSlot = 6;
inline constexpr std::size_t kAnySdohSlot = 7;
using CountTable = std::array<LabelCounts, 8>;

/// Inputs are aligned CategorySet bitmasks. Throws std::invalid_argument on
/// a length mismatch.
CountTable count_confusion_serial(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred);
CountTable count_confusion_parallel(std::span<const std::uint8_t> gold, std::span<const std::uint8_t> pred);

std::vector<NoteSegmentation> segment_notes_serial(std::span<const std::string_view> texts,
                                                   const SegmentOptions& options);
std::vector<NoteSegmentation> segment_notes_parallel(std::span<const std::string_view> texts,
                                                     const SegmentOptions& options);

std::vector<TaskLabels> classify_lexicon_serial(const LexiconRules& rules, std::span<const std::string> sentences);
std::vector<TaskLabels> classify_lexicon_parallel(const LexiconRules& rules, std::span<const std::string> sentences);

/// Threads OpenMP will use for the parallel kernels.
int max_threads();

}  // namespace sdoh::kernels

#endif  // SDOH_KERNELS_HPP_
