// SPDX-License-Identifier: Apache-2.0

#include "tprt/wavelets.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

std::vector<double> random_grid(int side) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> v(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
  for (auto& x : v) x = n(rng);
  return v;
}

template <tprt::Wavelet W>
void BM_Forward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto source = random_grid(side);
  auto work = source;
  for (auto _ : state) {
    work = source;
    tprt::forward_inplace(W, work, side);
    benchmark::DoNotOptimize(work.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(source.size()));
}

template <tprt::Wavelet W>
void BM_Inverse(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto source = random_grid(side);
  auto work = source;
  for (auto _ : state) {
    work = source;
    tprt::inverse_inplace(W, work, side);
    benchmark::DoNotOptimize(work.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(source.size()));
}

void BM_TopN(benchmark::State& state) {
  const auto source = random_grid(static_cast<int>(state.range(0)));
  const std::size_t keep = source.size() / 100 + 1;
  for (auto _ : state) benchmark::DoNotOptimize(tprt::compress_top_n(source, keep));
}

}  // namespace

BENCHMARK(BM_Forward<tprt::Wavelet::Haar>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Inverse<tprt::Wavelet::Haar>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Forward<tprt::Wavelet::Cdf97>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_Inverse<tprt::Wavelet::Cdf97>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_TopN)->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
