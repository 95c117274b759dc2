// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "config.hpp"

#include "tprt/container.hpp"
#include "tprt/runtime.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace tprt::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitIo = 3,
};

/// Built-in defaults for every configuration key.
[[nodiscard]] Json default_config();

/// Makes relative path-valued keys of a loaded config file absolute against `base`.
void resolve_config_paths(Json& config, const std::filesystem::path& base);

/// Typed views of the configuration sections.
[[nodiscard]] BasisGridConfig basis_grid_from(const Json& config);
[[nodiscard]] PrecomputeOptions precompute_options_from(const Json& config);
[[nodiscard]] RuntimeOptions runtime_options_from(const Json& config);
[[nodiscard]] OpticalMaterial material_from(const Json& config);
/// Camera section, or a view framing the mesh bounds when no position is set.
[[nodiscard]] Camera camera_from(const Json& config, const TriangleMesh& mesh);
/// Lights section, or one key light scaled to give unit irradiance on the facing side.
[[nodiscard]] LightRig lights_from(const Json& config, const TriangleMesh& mesh);

/// Whether the stored transfer keeps every coefficient in both steps.
[[nodiscard]] bool is_lossless(const CompressedTransfer& transfer);

/// Builds the basis, atlas, transfer and optional folded ambient operator for a mesh.
[[nodiscard]] PrecomputedScene precompute_scene(const TriangleMesh& mesh, const Json& config, std::ostream* log);

/// Relighter for the configured material, lights and camera.
[[nodiscard]] std::unique_ptr<Relighter> make_relighter(std::shared_ptr<const SceneAssets> assets, const Json& config);

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tprt::app
