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

// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "fuzz_notes.hpp"
#include "sdoh/kernels.hpp"

namespace {

using namespace sdoh;

struct Masks {
  std::vector<std::uint8_t> gold, pred;
};

const Masks& masks(std::size_t n) {
  static std::map<std::size_t, Masks> cache;
  auto& m = cache[n];
  if (m.gold.empty()) {
    std::mt19937_64 g(1);
    m.gold.resize(n);
    m.pred.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.gold[i] = static_cast<std::uint8_t>(g() & 0x3f);
      m.pred[i] = static_cast<std::uint8_t>(g() & 0x3f);
    }
  }
  return m;
}

const std::vector<std::string>& notes() {
  static const std::vector<std::string> n = [] {
    std::mt19937_64 g(2);
    std::vector<std::string> out;
    for (int i = 0; i < 2000; ++i) out.push_back(fuzz::random_note(g));
    return out;
  }();
  return n;
}

const std::vector<std::string>& sentences() {
  static const std::vector<std::string> s = [] {
    std::vector<std::string> out;
    for (const auto& note : notes()) {
      auto seg = segment_note(note, SegmentOptions{});
      for (auto& span : seg.sentences) out.push_back(span.text);
    }
    return out;
  }();
  return s;
}

template <auto Fn>
void confusion(benchmark::State& state) {
  const auto& m = masks(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(m.gold, m.pred));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void segmentation(benchmark::State& state) {
  std::vector<std::string_view> views(notes().begin(), notes().end());
  SegmentOptions o;
  for (auto _ : state) benchmark::DoNotOptimize(Fn(views, o));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(views.size()));
}

template <auto Fn>
void lexicon(benchmark::State& state) {
  const auto rules = LexiconRules::defaults();
  const auto& s = sentences();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(rules, s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}

}  // namespace

BENCHMARK(confusion<kernels::count_confusion_serial>)->Name("confusion/serial")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(confusion<kernels::count_confusion_parallel>)->Name("confusion/parallel")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(segmentation<kernels::segment_notes_serial>)->Name("segment/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(segmentation<kernels::segment_notes_parallel>)->Name("segment/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(lexicon<kernels::classify_lexicon_serial>)->Name("lexicon/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(lexicon<kernels::classify_lexicon_parallel>)->Name("lexicon/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
