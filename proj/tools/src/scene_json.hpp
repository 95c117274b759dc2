// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "config.hpp"

#include "tprt/lighting.hpp"
#include "tprt/runtime.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tprt::app {

struct Preset {
  std::string name;
  OpticalMaterial material;
};

/// Named parameter sets in mm^-1.
[[nodiscard]] const std::vector<Preset>& material_presets();
[[nodiscard]] OpticalMaterial preset_material(const std::string& name);

[[nodiscard]] Json to_json(const OpticalMaterial& m);
[[nodiscard]] Json to_json(const Camera& c);
[[nodiscard]] Json to_json(const Light& light);
[[nodiscard]] Json to_json(const LightRig& rig);

/// Applies a material object onto `base`. Accepts a "preset" name, and
/// "sigma_s_prime"/"sigma_a" as scalars or arrays; "channel" ("rgb", "r", "g",
/// "b") selects which channels the values apply to. The result is validated.
[[nodiscard]] OpticalMaterial material_from_json(const Json& j, const OpticalMaterial& base);
[[nodiscard]] Camera camera_from_json(const Json& j, const Camera& base);
/// Environment paths are resolved against `base_dir`.
[[nodiscard]] Light light_from_json(const Json& j, const std::filesystem::path& base_dir = {});
[[nodiscard]] LightRig lights_from_json(const Json& array, const std::filesystem::path& base_dir = {});

/// Compact command-line light syntax:
///   point:X,Y,Z:I            dir:DX,DY,DZ:E          sphere:X,Y,Z:R:L
///   env:PATH                 env-const:L
/// Each intensity is one value or R,G,B.
[[nodiscard]] Light parse_light_spec(const std::string& spec);
/// The same spec as a light object without loading any file.
[[nodiscard]] Json light_spec_to_json(const std::string& spec);

[[nodiscard]] Vec3 parse_vec3(const std::string& text);
[[nodiscard]] Rgb parse_rgb(const std::string& text);

}  // namespace tprt::app
