// SPDX-License-Identifier: Apache-2.0

#include "tprt/binary_io.hpp"
#include "tprt/container.hpp"

#include "support/scenes.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

using namespace tprt;

namespace {

constexpr std::size_t kHeaderBytes = 68;  // magic, version, hash, n, K, parts, level, chunk count
constexpr std::size_t kChunkCountOffset = 64;

const PrecomputedScene& small_scene() {
  static const PrecomputedScene scene = [] {
    scenes::SceneSpec spec;
    spec.k = 3;
    spec.step1_fraction = 0.05;
    spec.visibility_face = 2;
    auto s = scenes::precompute(make_icosphere(2, 3.0), spec);
    s.meta_json = R"({"generator":"test"})";
    return s;
  }();
  return scene;
}

void expect_same(const PrecomputedScene& a, const PrecomputedScene& b) {
  EXPECT_EQ(a.mesh_hash, b.mesh_hash);
  EXPECT_EQ(a.basis.bases, b.basis.bases);
  EXPECT_EQ(a.basis.r_nodes, b.basis.r_nodes);
  EXPECT_EQ(a.atlas, b.atlas);
  ASSERT_EQ(a.transfer.count(), b.transfer.count());
  EXPECT_EQ(a.transfer.domain_size(), b.transfer.domain_size());
  EXPECT_EQ(a.transfer.step1_terms(), b.transfer.step1_terms());
  for (int k = 0; k < a.transfer.count(); ++k) {
    const auto& x = a.transfer.block(k);
    const auto& y = b.transfer.block(k);
    ASSERT_EQ(x.columns.size(), y.columns.size());
    for (std::size_t c = 0; c < x.columns.size(); ++c) {
      EXPECT_EQ(x.columns[c].source, y.columns[c].source);
      EXPECT_EQ(x.columns[c].spectrum.indices, y.columns[c].spectrum.indices);
      EXPECT_EQ(x.columns[c].spectrum.values, y.columns[c].spectrum.values);
    }
  }
  ASSERT_EQ(a.ambient.has_value(), b.ambient.has_value());
  if (a.ambient) {
    EXPECT_EQ(a.ambient->face_side, b.ambient->face_side);
    EXPECT_EQ(a.ambient->stored_nnz(), b.ambient->stored_nnz());
  }
  EXPECT_EQ(a.meta_json, b.meta_json);
}

}  // namespace

TEST(Container, RoundTripInMemory) {
  const auto bytes = serialize_container(small_scene());
  const auto back = deserialize_container(bytes);
  expect_same(small_scene(), back);
  // Stored values are already single precision, so a second pass is byte-identical.
  EXPECT_EQ(serialize_container(back), bytes);
}

TEST(Container, RoundTripOnDiskWithHashCheck) {
  scenes::TempDir dir;
  const auto mesh = make_icosphere(2, 3.0);
  save_container(dir / "s.prt", small_scene());
  expect_same(small_scene(), load_container(dir / "s.prt", &mesh));
  const auto other = make_icosphere(2, 3.5);
  EXPECT_THROW((void)load_container(dir / "s.prt", &other), HashMismatch);
}

TEST(Container, WithoutAmbient) {
  auto scene = small_scene();
  scene.ambient.reset();
  expect_same(scene, deserialize_container(serialize_container(scene)));
}

TEST(Container, RejectsBadMagicVersionAndTruncation) {
  auto bytes = serialize_container(small_scene());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW((void)deserialize_container(bad), FormatError);
  bad = bytes;
  bad[8] = 9;
  EXPECT_THROW((void)deserialize_container(bad), FormatError);
  for (std::size_t cut : {std::size_t{4}, kHeaderBytes, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> shorter(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW((void)deserialize_container(shorter), FormatError) << "cut at " << cut;
  }
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW((void)deserialize_container(bad), FormatError);
}

TEST(Container, SkipsUnknownChunks) {
  auto bytes = serialize_container(small_scene());
  std::uint32_t chunks = 0;
  std::memcpy(&chunks, bytes.data() + kChunkCountOffset, 4);
  ++chunks;
  std::memcpy(bytes.data() + kChunkCountOffset, &chunks, 4);
  BinaryWriter extra;
  extra.put_bytes(std::vector<std::uint8_t>{'X', 'T', 'R', 'A'});
  extra.put<std::uint64_t>(3);
  extra.put_bytes(std::vector<std::uint8_t>{1, 2, 3});
  bytes.insert(bytes.begin() + kHeaderBytes, extra.bytes().begin(), extra.bytes().end());
  expect_same(small_scene(), deserialize_container(bytes));
}

TEST(Container, MismatchedBasisAndTransferRejected) {
  auto scene = small_scene();
  scene.basis = scene.basis.truncated(2);
  EXPECT_THROW((void)serialize_container(scene), InvalidArgument);
}

TEST(Container, IoErrors) {
  scenes::TempDir dir;
  EXPECT_THROW(save_container(dir / "missing/s.prt", small_scene()), IoError);
  EXPECT_THROW((void)load_container(dir / "nothing.prt"), IoError);
  std::ofstream(dir / "junk.prt") << "not a container";
  EXPECT_THROW((void)load_container(dir / "junk.prt"), FormatError);
}

TEST(BasisFile, RoundTripAndErrors) {
  scenes::TempDir dir;
  const auto& b = scenes::default_basis(5);
  save_basis(dir / "b.bin", b);
  const auto back = load_basis(dir / "b.bin");
  EXPECT_EQ(back.bases, b.bases);
  EXPECT_EQ(back.singular_values, b.singular_values);
  EXPECT_EQ(back.eta, b.eta);
  save_container(dir / "s.prt", small_scene());
  EXPECT_THROW((void)load_basis(dir / "s.prt"), FormatError);
  EXPECT_THROW((void)load_basis(dir / "none.bin"), IoError);
}
