// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string_view>

namespace tprt::app {

using Json = nlohmann::json;

/// Parses the TOML subset used by tprt configs into a JSON object: comments,
/// [table] and [[array-of-tables]] headers with dotted names, bare or quoted
/// keys, basic strings, integers, floats, booleans, and single-line arrays.
[[nodiscard]] Json parse_toml(std::string_view text);
[[nodiscard]] Json load_toml(const std::filesystem::path& path);

/// Recursively overlays `patch` onto `base`; objects merge, everything else replaces.
void merge_into(Json& base, const Json& patch);

}  // namespace tprt::app
