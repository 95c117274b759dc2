// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tprt {

class BinaryReader;
class BinaryWriter;

using MeshHash = std::array<std::uint8_t, 32>;

/// Indexed triangle mesh; positions in mm.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  [[nodiscard]] double triangle_area(std::size_t t) const;
  [[nodiscard]] double total_area() const;
  [[nodiscard]] std::pair<Vec3, Vec3> bounds() const;
  /// SHA-256 over positions (f64) and indices (u32), little-endian.
  [[nodiscard]] MeshHash hash() const;
};

[[nodiscard]] std::string to_hex(const MeshHash& h);

/// Drops zero-area triangles, recomputes missing normals, and normalizes the rest.
void cleanup_mesh(TriangleMesh& mesh);

/// Area-weighted vertex normals from the face geometry.
void compute_vertex_normals(TriangleMesh& mesh);

/// Wavefront OBJ reader: v/vn/f records, polygons fan-triangulated, vertices
/// deduplicated by exact position. Throws ParseError naming the offending line.
[[nodiscard]] TriangleMesh load_mesh(const std::filesystem::path& path);
[[nodiscard]] TriangleMesh parse_obj(std::string_view text);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

// Procedural meshes used by tests and the bundled assets.
[[nodiscard]] TriangleMesh make_icosphere(int subdivisions, double radius);
[[nodiscard]] TriangleMesh make_box(const Vec3& lo, const Vec3& hi, int segments);
[[nodiscard]] TriangleMesh make_uv_sphere(const Vec3& center, double radius, int rings, int segments);
[[nodiscard]] TriangleMesh make_cylinder(const Vec3& base, double radius, double height, int rings, int segments);
[[nodiscard]] TriangleMesh merge_meshes(std::span<const TriangleMesh> parts);

/// Surface quadrature points: one per vertex with one third of every incident triangle's area.
struct SurfaceSamples {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<double> area;
  std::vector<std::uint32_t> source_vertex;

  [[nodiscard]] std::size_t size() const { return positions.size(); }
  [[nodiscard]] double total_area() const;
};

[[nodiscard]] SurfaceSamples sample_surface(const TriangleMesh& mesh);

/// Recursive longest-axis median bisection into the next power of two >= m parts.
[[nodiscard]] std::vector<std::uint32_t> partition_points(std::span<const Vec3> points, int m);

/// Cell reference inside the atlas.
struct AtlasCell {
  std::uint32_t part = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
};

/// Bijection between samples and the non-PAD cells of part_count grids of side 2^n.
class QuadtreeAtlas {
 public:
  static constexpr std::int32_t kPad = -1;

  QuadtreeAtlas() = default;
  QuadtreeAtlas(int part_count, int level, std::vector<AtlasCell> assignment);

  [[nodiscard]] int part_count() const { return part_count_; }
  [[nodiscard]] int level() const { return level_; }
  [[nodiscard]] int side() const { return 1 << level_; }
  [[nodiscard]] std::size_t cells_per_part() const { return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side()); }
  /// Length of the concatenated multi-part domain.
  [[nodiscard]] std::size_t domain_size() const { return cells_per_part() * static_cast<std::size_t>(part_count_); }
  [[nodiscard]] std::size_t sample_count() const { return assignment_.size(); }

  [[nodiscard]] const AtlasCell& cell_of(std::size_t sample) const { return assignment_[sample]; }
  /// Flat index of a sample in the concatenated domain.
  [[nodiscard]] std::size_t domain_index(std::size_t sample) const { return domain_index_[sample]; }
  /// Sample occupying a cell, or kPad.
  [[nodiscard]] std::int32_t sample_at(int part, int row, int col) const;
  [[nodiscard]] std::span<const std::int32_t> inverse(int part) const;
  [[nodiscard]] std::size_t part_sample_count(int part) const;
  /// Samples in atlas order (part-major, then row-major cells).
  [[nodiscard]] std::vector<std::uint32_t> atlas_order() const;

  void write(BinaryWriter& out) const;
  static QuadtreeAtlas read(BinaryReader& in, std::size_t expected_samples);

  bool operator==(const QuadtreeAtlas& o) const {
    return part_count_ == o.part_count_ && level_ == o.level_ && domain_index_ == o.domain_index_;
  }

 private:
  int part_count_ = 0;
  int level_ = 0;
  std::vector<AtlasCell> assignment_;
  std::vector<std::size_t> domain_index_;
  std::vector<std::int32_t> inverse_;  // part_count * side^2
};

/// Smallest n with parts * 4^n >= sample count.
[[nodiscard]] int default_level(std::size_t sample_count, int parts);

/// Morton (Z-order) index <-> (row, col) on a 2^n grid.
[[nodiscard]] std::uint32_t morton_encode(std::uint32_t row, std::uint32_t col);
void morton_decode(std::uint32_t code, std::uint32_t& row, std::uint32_t& col);

/// Partitions the samples into m parts and lays each part's balanced quadtree
/// out in Morton order on a 2^n x 2^n grid. Throws InvalidArgument if a part
/// exceeds 4^n samples.
[[nodiscard]] QuadtreeAtlas build_quadtree_atlas(std::span<const Vec3> positions, int m, int n);

/// Scatter per-sample values of one part onto its grid; PAD cells become 0.
[[nodiscard]] std::vector<double> flatten(const QuadtreeAtlas& atlas, int part, std::span<const double> values);
/// Gather grid values back to samples of one part (writes only that part's samples).
void unflatten(const QuadtreeAtlas& atlas, int part, std::span<const double> grid, std::span<double> values);

/// Whole-domain variants over all parts (length domain_size()).
[[nodiscard]] std::vector<double> flatten_all(const QuadtreeAtlas& atlas, std::span<const double> values);
void flatten_all_into(const QuadtreeAtlas& atlas, std::span<const double> values, std::span<double> domain);
[[nodiscard]] std::vector<double> unflatten_all(const QuadtreeAtlas& atlas, std::span<const double> domain);

}  // namespace tprt
