// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/basis.hpp"
#include "tprt/bvh.hpp"
#include "tprt/container.hpp"
#include "tprt/image.hpp"
#include "tprt/lighting.hpp"
#include "tprt/surface.hpp"
#include "tprt/transfer.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tprt {

/// Immutable geometry and precomputed operators shared by every frame.
struct SceneAssets {
  TriangleMesh mesh;
  SurfaceSamples samples;
  QuadtreeAtlas atlas;
  DiffusionBasis basis;
  CompressedTransfer transfer;
  std::optional<FoldedAmbientTransfer> ambient;
  RayAccelerator accel;
  std::string meta_json = "{}";

  /// Binds a loaded container to its mesh (hash already checked by the loader).
  static std::shared_ptr<const SceneAssets> assemble(TriangleMesh mesh, PrecomputedScene pre);
};

struct Camera {
  Vec3 position{0.0, 0.0, 40.0};
  Vec3 target = Vec3::Zero();
  Vec3 up{0.0, 1.0, 0.0};
  double fov_degrees = 35.0;

  void validate() const;
};

/// Milliseconds spent per pipeline stage.
struct StageTimings {
  double irradiance = 0.0;
  double transfer = 0.0;
  double weighting = 0.0;
  double inverse_wavelet = 0.0;
  double raster = 0.0;  // per-vertex shading plus any image rasterization

  [[nodiscard]] double total() const { return irradiance + transfer + weighting + inverse_wavelet + raster; }
};

struct FrameStats {
  Rgb irradiance_energy{1.0, 1.0, 1.0};  // kept / total of the truncated w0 irradiance
  std::size_t irradiance_terms = 0;
  TransferStats transfer;
  bool material_clamped = false;
};

struct FrameResult {
  ChannelVectors radiance;   // per sample, clamped to >= 0
  ChannelVectors unclamped;  // the same before clamping
  StageTimings timings;
  FrameStats stats;
  bool edit_path = false;
};

struct RuntimeOptions {
  double irradiance_fraction = 0.04;  // share of w0 irradiance coefficients kept
  bool irradiance_keep_all = false;
  std::size_t environment_terms = 128;
  IrradianceOptions irradiance;
};

/// The per-frame pipeline with the caches that make material edits cheap.
/// Not thread-safe; one owner thread drives it.
class Relighter {
 public:
  Relighter(std::shared_ptr<const SceneAssets> assets, OpticalMaterial material, LightRig lights, Camera camera,
            RuntimeOptions options = {});

  /// Full pipeline from irradiance onward.
  const FrameResult& relight();
  /// Reprojects s_k and redoes the weighted sum only. A change of eta also
  /// changes the entering Fresnel factor inside E, so it falls back to relight().
  const FrameResult& set_material(const OpticalMaterial& material);
  const FrameResult& set_lights(LightRig lights);
  /// Only the view-dependent shading changes.
  const FrameResult& set_camera(const Camera& camera);

  [[nodiscard]] const FrameResult& frame() const { return frame_; }
  [[nodiscard]] const OpticalMaterial& material() const { return material_; }
  [[nodiscard]] const LightRig& lights() const { return lights_; }
  [[nodiscard]] const Camera& camera() const { return camera_; }
  [[nodiscard]] const SceneAssets& assets() const { return *assets_; }
  [[nodiscard]] std::shared_ptr<const SceneAssets> shared_assets() const { return assets_; }
  [[nodiscard]] const RuntimeOptions& options() const { return options_; }
  /// Direct plus ambient irradiance per sample from the last full relight.
  [[nodiscard]] const ChannelVectors& direct_irradiance() const { return irradiance_; }

 private:
  void compute_weighted_stage();
  void shade();

  std::shared_ptr<const SceneAssets> assets_;
  OpticalMaterial material_;
  LightRig lights_;
  Camera camera_;
  RuntimeOptions options_;

  ChannelVectors irradiance_;
  std::vector<ChannelVectors> v_;  // [k][c] over the w1 domain
  MaterialWeights weights_;
  ChannelVectors scattered_;  // per sample, before the exit Fresnel factor
  FrameResult frame_;
  bool material_clamped_ = false;
};

/// Outgoing radiance from scattered exitance: (1/pi) F_t(eta, n . view).
[[nodiscard]] ChannelVectors shade_samples(const SurfaceSamples& samples, const ChannelVectors& scattered,
                                           const Camera& camera, double eta);

struct RasterOptions {
  int width = 512;
  int height = 512;
  double exposure = 1.0;
  Rgb background{0.0, 0.0, 0.0};
};

/// Z-buffered software rasterization of per-vertex radiance, tone mapped to sRGB.
[[nodiscard]] Image8 render_image(const TriangleMesh& mesh, const SurfaceSamples& samples,
                                  const ChannelVectors& radiance, const Camera& camera, const RasterOptions& options);

struct StageSummary {
  double median = 0.0;
  double p90 = 0.0;
};

struct BenchReport {
  int iterations = 0;
  std::array<StageSummary, 5> relight_stages;  // irradiance, transfer, weighting, inverse_wavelet, raster
  std::array<StageSummary, 5> edit_stages;
  StageSummary relight_total;
  StageSummary edit_total;
};

inline constexpr std::array<const char*, 5> kStageNames = {"irradiance", "transfer", "weighting", "inverse_wavelet",
                                                           "raster"};

/// Alternates full relights and material edits on a warmed relighter.
[[nodiscard]] BenchReport bench(Relighter& relighter, int iterations);

}  // namespace tprt
