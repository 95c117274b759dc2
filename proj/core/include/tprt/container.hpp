// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/basis.hpp"
#include "tprt/surface.hpp"
#include "tprt/transfer.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace tprt {

inline constexpr std::uint32_t kContainerVersion = 1;

/// Everything a precompute run produces for one mesh.
struct PrecomputedScene {
  MeshHash mesh_hash{};
  DiffusionBasis basis;
  QuadtreeAtlas atlas;
  CompressedTransfer transfer;
  std::optional<FoldedAmbientTransfer> ambient;
  std::string meta_json = "{}";
};

[[nodiscard]] std::vector<std::uint8_t> serialize_container(const PrecomputedScene& scene);
[[nodiscard]] PrecomputedScene deserialize_container(std::span<const std::uint8_t> bytes);

void save_container(const std::filesystem::path& path, const PrecomputedScene& scene);
/// Loads a container. When a mesh is given its hash must match the stored one.
[[nodiscard]] PrecomputedScene load_container(const std::filesystem::path& path, const TriangleMesh* mesh = nullptr);

/// Standalone basis file: magic "PRTB1", version, then the basis record.
void save_basis(const std::filesystem::path& path, const DiffusionBasis& basis);
[[nodiscard]] DiffusionBasis load_basis(const std::filesystem::path& path);

}  // namespace tprt
