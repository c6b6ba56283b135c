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

// Deliberately naive reference computations that tests compare the library
// against. Nothing here calls into sdoh.

#ifndef SDOH_TESTS_ORACLES_HPP_
#define SDOH_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

// Cohen's kappa by explicit enumeration of the category alphabet.
inline double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  std::set<int> alphabet(a.begin(), a.end());
  alphabet.insert(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
  const double po = agree / n;
  double pe = 0;
  for (int k : alphabet) {
    double ca = 0, cb = 0;
    for (int v : a) ca += v == k ? 1 : 0;
    for (int v : b) cb += v == k ? 1 : 0;
    pe += (ca / n) * (cb / n);
  }
  if (pe == 1.0) return 1.0;
  return (po - pe) / (1 - pe);
}

// Nominal Krippendorff alpha: explicit coincidence matrix, then
// 1 - (n - 1) * sum_{c!=k} o_ck / sum_{c!=k} n_c n_k.
inline double krippendorff_alpha(const std::vector<std::vector<int>>& units) {
  std::map<std::pair<int, int>, double> o;
  for (const auto& u : units) {
    const std::size_t m = u.size();
    if (m < 2) continue;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) o[{u[i], u[j]}] += 1.0 / static_cast<double>(m - 1);
  }
  std::map<int, double> nc;
  double n = 0;
  for (const auto& [ck, v] : o) {
    nc[ck.first] += v;
    n += v;
  }
  double observed = 0;
  for (const auto& [ck, v] : o)
    if (ck.first != ck.second) observed += v;
  double expected = 0;
  for (const auto& [c, vc] : nc)
    for (const auto& [k, vk] : nc)
      if (c != k) expected += vc * vk;
  if (expected == 0) return 1.0;
  return 1.0 - (n - 1) * observed / expected;
}

struct Counts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// One-vs-rest counts for a bit of a label bitmask.
inline Counts confusion_bit(const std::vector<std::uint8_t>& gold, const std::vector<std::uint8_t>& pred, int bit) {
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = (gold[i] >> bit) & 1;
    const bool p = (pred[i] >> bit) & 1;
    if (g && p) ++c.tp;
    else if (!g && p) ++c.fp;
    else if (g && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

// Counts for "the set is empty" (negative class) or "non-empty".
inline Counts confusion_empty(const std::vector<std::uint8_t>& gold, const std::vector<std::uint8_t>& pred,
                              bool empty_class) {
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = (gold[i] == 0) == empty_class;
    const bool p = (pred[i] == 0) == empty_class;
    if (g && p) ++c.tp;
    else if (!g && p) ++c.fp;
    else if (g && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double f1(const Counts& c) {
  const double p = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : 0.0;
  const double r = c.tp + c.fn ? double(c.tp) / double(c.tp + c.fn) : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

// Pearson chi-squared straight from the definition.
inline double chi_squared(const std::vector<std::vector<double>>& t) {
  double total = 0;
  std::vector<double> rows(t.size(), 0), cols(t[0].size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      rows[i] += t[i][j];
      cols[j] += t[i][j];
      total += t[i][j];
    }
  double x = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      const double e = rows[i] * cols[j] / total;
      x += (t[i][j] - e) * (t[i][j] - e) / e;
    }
  return x;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace oracle

#endif  // SDOH_TESTS_ORACLES_HPP_
