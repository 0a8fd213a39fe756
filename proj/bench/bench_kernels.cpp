// SPDX-License-Identifier: Apache-2.0
// Serial reference against the OpenMP reduction of the misfit kernels.
#include <benchmark/benchmark.h>

#include "l2rom/kernels.hpp"
#include "l2rom/models.hpp"
#include "l2rom/optimize.hpp"

namespace {

using namespace l2rom;

struct Problem {
  StructuredRom rom;
  SampleSet data;
};

// Frequency samples of a random 40-state system against a random order-r rom.
Problem make_problem(int r, int n_samples) {
  const AffineLtiFom fom = make_random_stable(40, 2, 2, 7);
  const auto freqs = logspace(1e-2, 1e2, n_samples / 2);
  return {random_rom(RomStructure::lti, r, 2, 2, 3),
          sample_frequency_response(fom, freqs, std::vector<double>(freqs.size(), 1.0))};
}

template <Execution exec>
void BM_Accumulate(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto acc = accumulate_l2(p.rom, p.data, true, exec);
    benchmark::DoNotOptimize(acc.objective);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.data.size()));
  state.counters["threads"] = exec == Execution::parallel ? thread_limit() : 1;
}

template <Execution exec>
void BM_ObjectiveChange(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  StructuredRom moved = p.rom;
  moved.a_terms[1].matrix *= 1.01;
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_l2_change(p.rom, moved, p.data, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.data.size()));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int r : {4, 16})
    for (int n : {256, 4096}) b->Args({r, n});
}

}  // namespace

BENCHMARK(BM_Accumulate<Execution::serial>)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Accumulate<Execution::parallel>)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ObjectiveChange<Execution::serial>)->Apply(sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ObjectiveChange<Execution::parallel>)->Apply(sizes)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
