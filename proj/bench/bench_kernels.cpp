#include <benchmark/benchmark.h>

#include "gbp/kernels.hpp"
#include "support.hpp"

using namespace gbp;

namespace {

const SdistPairs& sdist_workload() {
  static const SdistPairs pairs = [] {
    std::mt19937_64 rng(17);
    const auto P = share(FinPoset::validate({"w", "x", "y", "z"}, {{"w", "x"}, {"x", "y"}}));
    SdistPairs out;
    for (int i = 0; i < 4000; ++i)
      out.emplace_back(testing::random_subdist(rng, P, 4, 6), testing::random_subdist(rng, P, 4, 6));
    return out;
  }();
  return pairs;
}

struct RefineWorkload {
  std::vector<System> systems;
  std::vector<RefinementQuery> queries;
};

const RefineWorkload& refine_workload() {
  static const RefineWorkload w = [] {
    std::mt19937_64 rng(23);
    RefineWorkload out;
    for (int i = 0; i < 400; ++i) out.systems.push_back(testing::random_lts(rng, 4, {"a", "b"}));
    for (std::size_t i = 0; i + 1 < out.systems.size(); ++i)
      out.queries.push_back({&out.systems[i], 0, &out.systems[i + 1], 0, 8});
    return out;
  }();
  return w;
}

void BM_SdistSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(batch_sdist_leq_serial(sdist_workload()));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(sdist_workload().size()));
}

void BM_SdistParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(batch_sdist_leq(sdist_workload()));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(sdist_workload().size()));
  st.counters["threads"] = kernel_threads();
}

void BM_RefineSerial(benchmark::State& st) {
  const auto sem = Semantics::make(SemKind::Sim, {"a", "b"});
  for (auto _ : st) benchmark::DoNotOptimize(batch_refines_serial(sem, refine_workload().queries));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(refine_workload().queries.size()));
}

void BM_RefineParallel(benchmark::State& st) {
  const auto sem = Semantics::make(SemKind::Sim, {"a", "b"});
  for (auto _ : st) benchmark::DoNotOptimize(batch_refines(sem, refine_workload().queries));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(refine_workload().queries.size()));
  st.counters["threads"] = kernel_threads();
}

}  // namespace

BENCHMARK(BM_SdistSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SdistParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RefineSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RefineParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
