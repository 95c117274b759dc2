// SPDX-License-Identifier: Apache-2.0

#include "tprt/surface.hpp"

#include "support/scenes.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace tprt;

TEST(Obj, ParsesPolygonsAndNormals) {
  const auto mesh = parse_obj(
      "# quad\n"
      "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
      "vn 0 0 1\n"
      "f 1//1 2//1 3//1 4//1\n");
  EXPECT_EQ(mesh.vertices.size(), 4u);
  EXPECT_EQ(mesh.triangles.size(), 2u);
  ASSERT_EQ(mesh.normals.size(), 4u);
  for (const auto& n : mesh.normals) EXPECT_NEAR((n - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(mesh.total_area(), 1.0, 1e-12);
}

TEST(Obj, NegativeIndicesAndDuplicatePositions) {
  const auto mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 0 0\nf -4 -1 -2\n");
  EXPECT_EQ(mesh.vertices.size(), 3u);
  EXPECT_EQ(mesh.triangles.size(), 1u);
  // Normals come from the face winding when the file has none.
  ASSERT_EQ(mesh.normals.size(), 3u);
  EXPECT_NEAR(mesh.normals[0].z(), 1.0, 1e-12);
}

TEST(Obj, ErrorsNameTheLine) {
  try {
    (void)parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 x\nf 1 2 3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)parse_obj("v 0 0 0\nf 1 2 3\n"), ParseError);
  EXPECT_THROW((void)parse_obj("v 0 0 0\n"), ParseError);
  EXPECT_THROW((void)load_mesh("/nonexistent/mesh.obj"), IoError);
}

TEST(Obj, SaveLoadRoundTripPreservesHash) {
  scenes::TempDir dir;
  const auto mesh = make_icosphere(2, 3.0);
  save_obj(mesh, dir / "m.obj");
  const auto back = load_mesh(dir / "m.obj");
  EXPECT_EQ(back.vertices.size(), mesh.vertices.size());
  EXPECT_EQ(back.triangles, mesh.triangles);
  EXPECT_EQ(back.hash(), mesh.hash());
}

TEST(Mesh, CleanupDropsDegenerateTriangles) {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(2, 0, 0)};
  m.triangles = {{0, 1, 2}, {0, 1, 3}};
  cleanup_mesh(m);
  EXPECT_EQ(m.triangles.size(), 1u);
  EXPECT_EQ(m.normals.size(), m.vertices.size());
}

TEST(Mesh, HashChangesWithGeometry) {
  auto a = make_icosphere(1, 1.0);
  auto b = a;
  EXPECT_EQ(a.hash(), b.hash());
  b.vertices[3].x() += 1e-12;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(to_hex(a.hash()).size(), 64u);
}

TEST(Mesh, IcosphereShape) {
  const auto m = make_icosphere(4, 10.0);
  EXPECT_EQ(m.vertices.size(), 2562u);
  for (const auto& v : m.vertices) EXPECT_NEAR(v.norm(), 10.0, 1e-9);
  EXPECT_NEAR(m.total_area(), 4.0 * kPi * 100.0, 0.01 * 4.0 * kPi * 100.0);
}

TEST(Samples, AreasPartitionTheSurface) {
  const auto m = make_box(Vec3(0, 0, 0), Vec3(2, 3, 4), 5);
  const auto s = sample_surface(m);
  EXPECT_EQ(s.size(), m.vertices.size());
  EXPECT_NEAR(s.total_area(), 2.0 * (6.0 + 8.0 + 12.0), 1e-9);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s.normals[i].norm(), 1.0, 1e-12);
}

TEST(Partition, SinglePart) {
  std::vector<Vec3> pts(10, Vec3::Zero());
  for (auto l : partition_points(pts, 1)) EXPECT_EQ(l, 0u);
}

TEST(Partition, CubeCornersSplitOnLongestAxis) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.emplace_back(i & 1 ? 3.0 : 0.0, i & 2 ? 1.0 : 0.0, i & 4 ? 1.0 : 0.0);
  const auto labels = partition_points(pts, 2);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(labels[i], pts[i].x() > 1.0 ? labels[1] : labels[0]);
  EXPECT_NE(labels[0], labels[1]);
}

TEST(Partition, RandomPointsBalanced) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(10000);
  for (auto& p : pts) p = Vec3(u(rng), 0.3 * u(rng), 2.0 * u(rng));
  const auto labels = partition_points(pts, 16);
  std::vector<int> counts(16, 0);
  for (auto l : labels) ++counts.at(l);
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  EXPECT_LE(*hi - *lo, 1);
}

TEST(Partition, RoundsUpToPowerOfTwo) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(i, 0, 0);
  const auto labels = partition_points(pts, 3);
  EXPECT_LT(*std::max_element(labels.begin(), labels.end()), 4u);
}

TEST(Morton, RoundTrip) {
  for (std::uint32_t r = 0; r < 64; ++r)
    for (std::uint32_t c = 0; c < 64; ++c) {
      std::uint32_t rr = 0, cc = 0;
      morton_decode(morton_encode(r, c), rr, cc);
      EXPECT_EQ(rr, r);
      EXPECT_EQ(cc, c);
    }
  EXPECT_EQ(morton_encode(0, 1), 1u);
  EXPECT_EQ(morton_encode(1, 0), 2u);
  EXPECT_EQ(morton_encode(1, 1), 3u);
}

TEST(Atlas, DefaultLevel) {
  EXPECT_EQ(default_level(2562, 4), 5);
  EXPECT_EQ(default_level(4096, 4), 5);
  EXPECT_EQ(default_level(4097, 4), 6);
  EXPECT_EQ(default_level(1, 1), 0);
}

TEST(Atlas, BijectionAndPads) {
  const auto mesh = make_icosphere(3, 5.0);
  const auto s = sample_surface(mesh);
  const int n = default_level(s.size(), 4);
  const auto atlas = build_quadtree_atlas(s.positions, 4, n);
  EXPECT_EQ(atlas.sample_count(), s.size());
  EXPECT_EQ(atlas.domain_size(), 4u << (2 * n));
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto idx = atlas.domain_index(i);
    EXPECT_TRUE(seen.insert(idx).second);
    const auto& c = atlas.cell_of(i);
    EXPECT_EQ(atlas.sample_at(static_cast<int>(c.part), static_cast<int>(c.row), static_cast<int>(c.col)),
              static_cast<std::int32_t>(i));
  }
  std::size_t pads = 0;
  for (int p = 0; p < atlas.part_count(); ++p)
    for (auto v : atlas.inverse(p)) pads += v == QuadtreeAtlas::kPad;
  EXPECT_EQ(pads + s.size(), atlas.domain_size());
  const auto order = atlas.atlas_order();
  EXPECT_EQ(order.size(), s.size());
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_LT(atlas.domain_index(order[i - 1]), atlas.domain_index(order[i]));
}

TEST(Atlas, RejectsOverfullParts) {
  const auto s = sample_surface(make_icosphere(3, 5.0));
  EXPECT_THROW((void)build_quadtree_atlas(s.positions, 4, 2), InvalidArgument);
}

TEST(Atlas, FlattenRoundTripAndPadZero) {
  const auto s = sample_surface(make_icosphere(3, 5.0));
  const auto atlas = build_quadtree_atlas(s.positions, 4, default_level(s.size(), 4));
  std::vector<double> values(s.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 1.0 + static_cast<double>(i);
  const auto domain = flatten_all(atlas, values);
  for (int p = 0; p < atlas.part_count(); ++p) {
    const auto inv = atlas.inverse(p);
    for (std::size_t c = 0; c < inv.size(); ++c)
      if (inv[c] == QuadtreeAtlas::kPad) EXPECT_EQ(domain[static_cast<std::size_t>(p) * atlas.cells_per_part() + c], 0.0);
  }
  EXPECT_EQ(unflatten_all(atlas, domain), values);
  std::vector<double> back(s.size(), -1.0);
  for (int p = 0; p < atlas.part_count(); ++p) unflatten(atlas, p, flatten(atlas, p, values), back);
  EXPECT_EQ(back, values);
}

TEST(Atlas, MortonNeighboursAreSpatiallyClose) {
  const auto s = sample_surface(make_icosphere(4, 10.0));
  const auto atlas = build_quadtree_atlas(s.positions, 4, 5);
  const auto order = atlas.atlas_order();
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) total += (s.positions[order[i]] - s.positions[order[i - 1]]).norm();
  // Random order would average about 4/3 of the radius.
  EXPECT_LT(total / static_cast<double>(order.size() - 1), 3.0);
}
