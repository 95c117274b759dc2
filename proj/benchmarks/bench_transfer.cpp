// SPDX-License-Identifier: Apache-2.0

#include "support/scenes.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace tprt;

namespace {

const SceneAssets& desk() {
  static const auto assets = scenes::make_assets(scenes::desk_icosphere(), {});
  return *assets;
}

/// Random w0 signal truncated to the given share of the domain.
SparseSpectrum signal(std::size_t domain, double fraction) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> dense(domain);
  for (auto& x : dense) x = n(rng);
  return compress_top_n(dense, retained_count(domain, fraction));
}

void BM_ApplySparse(benchmark::State& state) {
  const auto& a = desk();
  const auto e = signal(a.transfer.domain_size(), static_cast<double>(state.range(0)) / 100.0);
  std::vector<double> out(a.transfer.domain_size());
  for (auto _ : state) {
    for (int k = 0; k < a.transfer.count(); ++k) {
      std::fill(out.begin(), out.end(), 0.0);
      a.transfer.apply(k, e, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["nnz"] = static_cast<double>(e.nnz());
}

void BM_ApplyDense(benchmark::State& state) {
  const auto& a = desk();
  const auto e = signal(a.transfer.domain_size(), 1.0).dense();
  std::vector<double> out(a.transfer.domain_size());
  for (auto _ : state) {
    for (int k = 0; k < a.transfer.count(); ++k) {
      std::fill(out.begin(), out.end(), 0.0);
      a.transfer.apply(k, e, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_ApplySparse)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ApplyDense)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
