// SPDX-License-Identifier: Apache-2.0
//
// Full relight against the material-edit path on the desk icosphere.

#include "support/scenes.hpp"

#include <benchmark/benchmark.h>

using namespace tprt;

namespace {

const std::shared_ptr<const SceneAssets>& desk() {
  static const auto assets = scenes::make_assets(scenes::desk_icosphere(), {});
  return assets;
}

void BM_Relight(benchmark::State& state) {
  Relighter r(desk(), scenes::marble(), scenes::key_light(), Camera{});
  for (auto _ : state) benchmark::DoNotOptimize(r.relight().radiance[0].data());
}

void BM_MaterialEdit(benchmark::State& state) {
  Relighter r(desk(), scenes::marble(), scenes::key_light(), Camera{});
  auto a = scenes::marble();
  auto b = a;
  b.sigma_a = {0.01, 0.02, 0.03};
  bool flip = false;
  for (auto _ : state) {
    flip = !flip;
    benchmark::DoNotOptimize(r.set_material(flip ? b : a).radiance[0].data());
  }
}

void BM_CameraEdit(benchmark::State& state) {
  Relighter r(desk(), scenes::marble(), scenes::key_light(), Camera{});
  Camera a, b;
  b.position = {30.0, 0.0, 30.0};
  bool flip = false;
  for (auto _ : state) {
    flip = !flip;
    benchmark::DoNotOptimize(r.set_camera(flip ? b : a).radiance[0].data());
  }
}

}  // namespace

BENCHMARK(BM_Relight)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaterialEdit)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CameraEdit)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
