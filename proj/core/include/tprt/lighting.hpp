// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/bvh.hpp"
#include "tprt/surface.hpp"
#include "tprt/wavelets.hpp"

#include <filesystem>
#include <variant>
#include <vector>

namespace tprt {

/// Six square faces (+X, -X, +Y, -Y, +Z, -Z) of side 2^l, linear RGB radiance.
/// Texel (face, row, col) lives at index face * side^2 + row * side + col.
struct Cubemap {
  int side = 0;
  std::array<std::vector<double>, kChannels> radiance;

  Cubemap() = default;
  Cubemap(int side_, const Rgb& fill);

  [[nodiscard]] std::size_t texel_count() const { return 6u * static_cast<std::size_t>(side) * static_cast<std::size_t>(side); }
  void validate() const;
};

/// Unit direction through the centre of a cubemap texel.
[[nodiscard]] Vec3 cubemap_direction(int side, int face, int row, int col);
/// Exact solid angle subtended by a cubemap texel.
[[nodiscard]] double cubemap_texel_solid_angle(int side, int row, int col);
/// Texel index hit by a direction.
[[nodiscard]] std::size_t cubemap_lookup(int side, const Vec3& direction);

/// The fixed direction set used for precomputed visibility: every texel of a cubemap.
struct DirectionSet {
  int face_side = 0;
  std::vector<Vec3> directions;
  std::vector<double> solid_angle;

  [[nodiscard]] std::size_t size() const { return directions.size(); }
};

[[nodiscard]] DirectionSet make_direction_set(int face_side);

/// Horizontal-cross layout (4s x 3s): +Y above +Z; -X, +Z, +X, -Z across; -Y below.
[[nodiscard]] Cubemap load_cubemap(const std::filesystem::path& path);
/// Six separate images in +X, -X, +Y, -Y, +Z, -Z order.
[[nodiscard]] Cubemap load_cubemap_faces(std::span<const std::filesystem::path> faces);

struct PointLight {
  Vec3 position = Vec3::Zero();
  Rgb intensity{1.0, 1.0, 1.0};  // W sr^-1
};

struct DirectionalLight {
  Vec3 direction{0.0, 0.0, -1.0};  // direction of travel, unit length
  Rgb irradiance{1.0, 1.0, 1.0};   // W mm^-2 on a surface facing the light
};

struct AmbientLight {
  Cubemap environment;
};

struct LocalSphereLight {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;          // mm
  Rgb radiance{1.0, 1.0, 1.0};  // W mm^-2 sr^-1
};

using Light = std::variant<PointLight, DirectionalLight, AmbientLight, LocalSphereLight>;

struct LightRig {
  std::vector<Light> lights;

  void validate() const;
  [[nodiscard]] const AmbientLight* ambient() const;
  [[nodiscard]] bool empty() const { return lights.empty(); }
};

/// Per-channel values over surface samples.
using ChannelVectors = std::array<std::vector<double>, kChannels>;

struct IrradianceOptions {
  double ray_offset = -1.0;  // < 0: 1e-4 x scene diagonal
  int sphere_samples = 64;
  std::uint64_t seed = 0x5eed;
};

/// E(x_i) with the entering Fresnel transmittance folded in, for point,
/// directional, and local sphere lights. Ambient lights are ignored here.
[[nodiscard]] ChannelVectors irradiance_direct(const SurfaceSamples& samples, const LightRig& rig,
                                               const RayAccelerator& accel, double eta,
                                               const IrradianceOptions& options = {});

/// Haar-projected environment: per-face haar2d concatenated, top-n per channel.
struct EnvironmentSpectrum {
  int face_side = 0;
  std::array<SparseSpectrum, kChannels> channels;
};

[[nodiscard]] EnvironmentSpectrum project_environment(const Cubemap& environment, std::size_t terms = 128);
[[nodiscard]] Cubemap reconstruct_environment(const EnvironmentSpectrum& spectrum);

struct FoldedAmbientTransfer;

/// Outgoing w1 coefficients for every basis and channel from the folded
/// operator: out[k][c] has length of the transfer's spatial domain.
[[nodiscard]] std::vector<ChannelVectors> irradiance_ambient(const FoldedAmbientTransfer& folded,
                                                             const EnvironmentSpectrum& environment);

}  // namespace tprt
