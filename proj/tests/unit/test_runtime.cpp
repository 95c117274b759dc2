// SPDX-License-Identifier: Apache-2.0

#include "tprt/runtime.hpp"

#include "support/scenes.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tprt;

namespace {

std::shared_ptr<const SceneAssets> assets() {
  static const auto a = [] {
    scenes::SceneSpec spec;
    spec.k = 6;
    spec.step1_fraction = 0.05;
    return scenes::make_assets(make_icosphere(3, 10.0), spec);
  }();
  return a;
}

Camera front() {
  Camera c;
  c.position = {0.0, 0.0, 60.0};
  return c;
}

void expect_close(const ChannelVectors& a, const ChannelVectors& b, double rel) {
  for (int c = 0; c < kChannels; ++c) {
    const auto& x = a[static_cast<std::size_t>(c)];
    const auto& y = b[static_cast<std::size_t>(c)];
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], rel * (std::abs(y[i]) + 1e-12));
  }
}

OpticalMaterial skin() {
  OpticalMaterial m;
  m.sigma_s_prime = {0.74, 0.88, 1.01};
  m.sigma_a = {0.032, 0.17, 0.48};
  return m;
}

}  // namespace

TEST(Relighter, EditMatchesFullRelight) {
  Relighter edited(assets(), scenes::marble(), scenes::key_light(), front());
  const auto& f = edited.set_material(skin());
  EXPECT_TRUE(f.edit_path);
  Relighter fresh(assets(), skin(), scenes::key_light(), front());
  expect_close(edited.frame().radiance, fresh.frame().radiance, 1e-6);
  expect_close(edited.frame().unclamped, fresh.frame().unclamped, 1e-6);
}

TEST(Relighter, RepeatedEditsAreBitwiseStable) {
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  const auto first = r.set_material(skin()).radiance;
  r.set_material(scenes::marble());
  EXPECT_EQ(r.set_material(skin()).radiance, first);
  EXPECT_EQ(r.set_material(skin()).radiance, first);
}

TEST(Relighter, EditSkipsIrradianceAndTransfer) {
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  const auto& f = r.set_material(skin());
  EXPECT_EQ(f.timings.irradiance, 0.0);
  EXPECT_EQ(f.timings.transfer, 0.0);
  const auto& full = r.relight();
  EXPECT_FALSE(full.edit_path);
  EXPECT_GT(full.timings.irradiance + full.timings.transfer, 0.0);
}

TEST(Relighter, EtaChangeTakesTheFullPath) {
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  auto m = scenes::marble();
  m.eta = 1.5;
  EXPECT_FALSE(r.set_material(m).edit_path);
  Relighter fresh(assets(), m, scenes::key_light(), front());
  EXPECT_EQ(r.frame().radiance, fresh.frame().radiance);
}

TEST(Relighter, CameraChangesShadingOnly) {
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  Camera side = front();
  side.position = {60.0, 0.0, 0.0};
  const auto& f = r.set_camera(side);
  EXPECT_TRUE(f.edit_path);
  EXPECT_EQ(f.timings.irradiance, 0.0);
  Relighter fresh(assets(), scenes::marble(), scenes::key_light(), side);
  EXPECT_EQ(r.frame().radiance, fresh.frame().radiance);
  Camera bad = front();
  bad.target = bad.position;
  EXPECT_THROW(r.set_camera(bad), InvalidArgument);
  bad = front();
  bad.up = {0.0, 0.0, 1.0};
  EXPECT_THROW(r.set_camera(bad), InvalidArgument);
}

TEST(Relighter, LinearInLightIntensity) {
  Relighter a(assets(), scenes::marble(), scenes::key_light(1000.0), front());
  Relighter b(assets(), scenes::marble(), scenes::key_light(3000.0), front());
  for (int c = 0; c < kChannels; ++c)
    for (std::size_t i = 0; i < a.frame().unclamped[0].size(); ++i) {
      const double x = a.frame().unclamped[static_cast<std::size_t>(c)][i];
      const double y = b.frame().unclamped[static_cast<std::size_t>(c)][i];
      EXPECT_NEAR(y, 3.0 * x, 1e-9 * (std::abs(y) + 1e-12));
    }
}

TEST(Relighter, NoLightsIsBlack) {
  Relighter r(assets(), scenes::marble(), LightRig{}, front());
  for (const auto& ch : r.frame().radiance)
    for (double v : ch) EXPECT_EQ(v, 0.0);
  const auto& lit = r.set_lights(scenes::key_light());
  double total = 0.0;
  for (double v : lit.radiance[0]) total += v;
  EXPECT_GT(total, 0.0);
}

TEST(Relighter, RejectsAmbientWithoutVisibility) {
  LightRig rig;
  rig.lights.push_back(AmbientLight{Cubemap(4, {1, 1, 1})});
  EXPECT_THROW(Relighter(assets(), scenes::marble(), rig, front()), InvalidArgument);
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  const auto before = r.frame().radiance;
  EXPECT_THROW(r.set_lights(rig), InvalidArgument);
  EXPECT_EQ(r.lights().lights.size(), 1u);
  EXPECT_EQ(r.frame().radiance, before);
}

TEST(Relighter, ClampsMaterialIntoTheBox) {
  auto m = scenes::marble();
  m.sigma_a = {5.0, 0.002, 0.002};
  Relighter r(assets(), m, scenes::key_light(), front());
  EXPECT_TRUE(r.frame().stats.material_clamped);
  EXPECT_DOUBLE_EQ(r.material().sigma_a[0], 1.0);
  EXPECT_FALSE(r.set_material(scenes::marble()).stats.material_clamped);
  auto bad = m;
  bad.sigma_a[1] = -1.0;
  EXPECT_THROW(r.set_material(bad), InvalidArgument);
}

TEST(Relighter, IrradianceTruncationStats) {
  RuntimeOptions opts;
  opts.irradiance_keep_all = true;
  Relighter all(assets(), scenes::marble(), scenes::key_light(), front(), opts);
  EXPECT_EQ(all.frame().stats.irradiance_terms, assets()->atlas.domain_size());
  EXPECT_NEAR(all.frame().stats.irradiance_energy[0], 1.0, 1e-12);
  Relighter some(assets(), scenes::marble(), scenes::key_light(), front());
  EXPECT_LT(some.frame().stats.irradiance_terms, assets()->atlas.domain_size());
  EXPECT_LE(some.frame().stats.irradiance_energy[0], 1.0);
}

TEST(Render, DeterministicAndSized) {
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  RasterOptions o;
  o.width = 64;
  o.height = 48;
  const auto a = render_image(assets()->mesh, assets()->samples, r.frame().radiance, r.camera(), o);
  const auto b = render_image(assets()->mesh, assets()->samples, r.frame().radiance, r.camera(), o);
  EXPECT_EQ(a.width, 64);
  EXPECT_EQ(a.height, 48);
  EXPECT_EQ(a.rgb, b.rgb);
  // The sphere covers the centre and misses the corner.
  const auto centre = static_cast<std::size_t>(3 * (24 * 64 + 32));
  EXPECT_GT(int{a.rgb[centre]} + a.rgb[centre + 1] + a.rgb[centre + 2], 0);
  EXPECT_EQ(a.rgb[0] + a.rgb[1] + a.rgb[2], 0);
}

TEST(Render, CameraFacingAwayShowsBackground) {
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  Camera away = front();
  away.target = {0.0, 0.0, 120.0};
  RasterOptions o;
  o.width = 16;
  o.height = 16;
  o.background = {1.0, 1.0, 1.0};
  const auto img = render_image(assets()->mesh, assets()->samples, r.frame().radiance, away, o);
  for (auto v : img.rgb) EXPECT_EQ(v, 255);
  o.width = 0;
  EXPECT_THROW((void)render_image(assets()->mesh, assets()->samples, r.frame().radiance, away, o), InvalidArgument);
}

TEST(Bench, ReportsEveryStage) {
  Relighter r(assets(), scenes::marble(), scenes::key_light(), front());
  const auto report = bench(r, 5);
  EXPECT_EQ(report.iterations, 5);
  EXPECT_GT(report.relight_total.median, 0.0);
  EXPECT_GE(report.relight_total.p90, report.relight_total.median);
  EXPECT_EQ(report.edit_stages[0].median, 0.0);
  EXPECT_EQ(report.edit_stages[1].median, 0.0);
  EXPECT_EQ(r.material(), scenes::marble());
  EXPECT_EQ(bench(r, 1).iterations, 1);
  EXPECT_THROW((void)bench(r, 0), InvalidArgument);
}
