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

// Published-count fixtures shared by unit and acceptance tests.

#ifndef SDOH_TESTS_FIXTURES_HPP_
#define SDOH_TESTS_FIXTURES_HPP_

#include <array>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sdoh/evalkit.hpp"

namespace fixtures {

/// Patient-level 2x2 as printed: rows are predictions, columns gold.
struct TwoByTwo {
  std::int64_t tp, fp, fn, tn;
};

inline constexpr TwoByTwo kAnyModel = {89, 3, 4, 58};
inline constexpr TwoByTwo kAdverseModel = {45, 13, 3, 93};
inline constexpr TwoByTwo kAdverseZcode = {1, 5, 47, 101};

/// 154 patients: 48 with adverse gold labels. The model flags 45 of them
/// plus 13 others; mapped Z-codes exist for one gold-positive patient and
/// five gold-negative ones, plus one unmapped and one education code.
struct PatientUniverse {
  sdoh::LabelMap gold;
  sdoh::LabelMap model;
  std::vector<sdoh::ZCodeRecord> zcodes;
};

inline PatientUniverse adverse_universe() {
  using C = sdoh::Category;
  PatientUniverse u;
  const std::array<C, 6> cats = {C::kEmployment, C::kHousing, C::kTransportation,
                                 C::kParent,     C::kRelationship, C::kSupport};
  for (int i = 0; i < 154; ++i) {
    const std::string id = fmt::format("P{:03}", i);
    sdoh::CategorySet g, m;
    if (i < 48) g.insert(cats[static_cast<std::size_t>(i) % cats.size()]);
    if (i < 45) m.insert(cats[static_cast<std::size_t>(i + 1) % cats.size()]);
    if (i >= 48 && i < 61) m.insert(C::kSupport);
    u.gold[id] = g;
    u.model[id] = m;
  }
  std::size_t line = 2;
  u.zcodes.push_back({"P000", "Z59.0", "2023-01-01", line++});
  for (int i = 100; i < 105; ++i) u.zcodes.push_back({fmt::format("P{:03}", i), "Z63.0", "2023-01-01", line++});
  u.zcodes.push_back({"P010", "Z91.81", "2023-01-01", line++});
  u.zcodes.push_back({"P011", "Z55.0", "2023-01-01", line++});
  return u;
}

/// Per-class F1 rows with the printed Macro-F1.
struct F1Row {
  const char* name;
  double macro;
  std::array<double, 7> f1;  // No SDoH, Employment, Housing, Parent, Relationship, Social Support, Transportation
};

inline const std::vector<F1Row>& printed_f1_rows() {
  static const std::vector<F1Row> rows = {
      {"any / BERT-base / gold", 0.51, {1.00, 0.71, 0.00, 0.00, 0.97, 0.59, 0.29}},
      {"any / BERT-base / gold+synthetic", 0.49, {1.00, 0.72, 0.00, 0.26, 0.94, 0.55, 0.00}},
      {"any / Flan-T5-base / gold", 0.36, {0.99, 0.34, 0.00, 0.00, 0.83, 0.38, 0.00}},
      {"any / Flan-T5-base / gold+synthetic", 0.51, {1.00, 0.67, 0.40, 0.00, 0.93, 0.28, 0.29}},
      {"any / Flan-T5-large / gold", 0.42, {1.00, 0.72, 0.00, 0.00, 0.93, 0.31, 0.00}},
      {"any / Flan-T5-large / gold+synthetic", 0.61, {1.00, 0.76, 0.67, 0.24, 0.91, 0.48, 0.18}},
      {"any / Flan-T5 XL / gold", 0.65, {0.99, 0.71, 0.57, 0.55, 0.92, 0.50, 0.33}},
      {"any / Flan-T5 XL / gold+synthetic", 0.69, {1.00, 0.73, 0.55, 0.56, 0.94, 0.52, 0.53}},
      {"any / Flan-T5 XXL / gold", 0.66, {1.00, 0.76, 0.33, 0.65, 0.95, 0.51, 0.46}},
      {"any / Flan-T5 XXL / gold+synthetic", 0.71, {1.00, 0.80, 0.67, 0.47, 0.93, 0.60, 0.47}},
      {"adverse / BERT-base / gold", 0.65, {1.00, 0.68, 0.57, 0.43, 0.92, 0.45, 0.53}},
      {"adverse / BERT-base / gold+synthetic", 0.59, {1.00, 0.75, 0.57, 0.53, 0.82, 0.25, 0.22}},
      {"adverse / Flan-T5-base / gold", 0.24, {1.00, 0.00, 0.00, 0.00, 0.43, 0.00, 0.29}},
      {"adverse / Flan-T5-base / gold+synthetic", 0.36, {1.00, 0.31, 0.40, 0.00, 0.56, 0.00, 0.27}},
      {"adverse / Flan-T5-large / gold", 0.28, {0.99, 0.46, 0.00, 0.00, 0.47, 0.00, 0.00}},
      {"adverse / Flan-T5-large / gold+synthetic", 0.50, {1.00, 0.58, 0.55, 0.33, 0.66, 0.22, 0.18}},
      {"adverse / Flan-T5 XL / gold", 0.70, {1.00, 0.75, 0.57, 0.52, 0.93, 0.44, 0.67}},
      {"adverse / Flan-T5 XL / gold+synthetic", 0.69, {1.00, 0.72, 0.67, 0.49, 0.87, 0.56, 0.57}},
      {"adverse / Flan-T5 XXL / gold", 0.64, {1.00, 0.67, 0.50, 0.60, 0.91, 0.31, 0.47}},
      {"adverse / Flan-T5 XXL / gold+synthetic", 0.66, {1.00, 0.62, 0.60, 0.55, 0.89, 0.53, 0.46}},
      {"any / immunotherapy / FlanXXL gold", 0.70, {0.99, 0.83, 0.56, 0.69, 0.93, 0.46, 0.46}},
      {"any / immunotherapy / FlanXXL gold+synthetic", 0.71, {0.99, 0.79, 0.56, 0.68, 0.91, 0.63, 0.40}},
      {"any / MIMIC-III / FlanXXL gold", 0.57, {0.98, 0.65, 0.00, 0.63, 0.91, 0.32, 0.50}},
      {"any / MIMIC-III / FlanXXL gold+synthetic", 0.55, {0.98, 0.69, 0.25, 0.44, 0.91, 0.33, 0.25}},
      {"adverse / immunotherapy / FlanXL gold", 0.64, {1.00, 0.70, 0.44, 0.62, 0.83, 0.42, 0.44}},
      {"adverse / immunotherapy / FlanXL gold+synthetic", 0.66, {1.00, 0.60, 0.63, 0.61, 0.82, 0.59, 0.40}},
      {"adverse / MIMIC-III / FlanXL gold", 0.54, {0.99, 0.55, 0.50, 0.37, 0.71, 0.37, 0.29}},
      {"adverse / MIMIC-III / FlanXL gold+synthetic", 0.54, {0.99, 0.55, 0.36, 0.54, 0.68, 0.44, 0.20}},
  };
  return rows;
}

}  // namespace fixtures

#endif  // SDOH_TESTS_FIXTURES_HPP_
