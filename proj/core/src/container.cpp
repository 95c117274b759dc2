// SPDX-License-Identifier: Apache-2.0

#include "tprt/container.hpp"

#include "tprt/binary_io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

namespace tprt {
namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'P', 'R', 'T', 'S', '1', 0, 0, 0};

using Tag = std::array<char, 4>;
constexpr Tag kBasis = {'B', 'A', 'S', 'I'};
constexpr Tag kAtlas = {'A', 'T', 'L', 'S'};
constexpr Tag kTransfer = {'T', 'R', 'N', 'S'};
constexpr Tag kVisibility = {'V', 'I', 'S', 'F'};
constexpr Tag kMeta = {'M', 'E', 'T', 'A'};

void put_chunk(BinaryWriter& out, const Tag& tag, const BinaryWriter& payload) {
  out.put_bytes({reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()});
  out.put<std::uint64_t>(payload.size());
  out.put_bytes(payload.bytes());
}

void write_block(BinaryWriter& w, std::uint32_t k, const CompressedTransfer& t) {
  const auto& b = t.block(static_cast<int>(k));
  w.put<std::uint32_t>(k);
  w.put<std::uint32_t>(t.domain_size());
  w.put<std::uint32_t>(t.step1_terms());
  w.put<double>(t.step2_fraction());
  w.put<double>(b.step1_total);
  w.put<double>(b.step1_kept);
  w.put<double>(b.step2_total);
  w.put<double>(b.step2_kept);
  w.put<std::uint64_t>(b.step1_nnz);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.columns.size()));
  for (const auto& c : b.columns) {
    w.put<std::uint32_t>(c.source);
    c.spectrum.write(w);
  }
}

struct BlockHeader {
  std::uint32_t domain = 0;
  std::uint32_t step1_terms = 0;
  double fraction = 0.0;
};

TransferBlock read_block(BinaryReader& r, std::uint32_t expected_k, BlockHeader& header) {
  if (r.get<std::uint32_t>() != expected_k) throw FormatError("transfer chunks are out of order");
  header.domain = r.get<std::uint32_t>();
  header.step1_terms = r.get<std::uint32_t>();
  header.fraction = r.get<double>();
  TransferBlock b;
  b.step1_total = r.get<double>();
  b.step1_kept = r.get<double>();
  b.step2_total = r.get<double>();
  b.step2_kept = r.get<double>();
  b.step1_nnz = r.get<std::uint64_t>();
  const auto count = r.get_count(4 + 24);
  b.columns.resize(count);
  for (auto& c : b.columns) {
    c.source = r.get<std::uint32_t>();
    c.spectrum = SparseSpectrum::read(r);
  }
  return b;
}

void write_folded(BinaryWriter& w, const FoldedAmbientTransfer& f) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(f.face_side));
  w.put<double>(f.eta);
  w.put<double>(f.fraction);
  w.put<std::uint32_t>(f.domain_size);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(f.columns.size()));
  for (const auto& k : f.columns) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(k.size()));
    for (const auto& s : k) s.write(w);
  }
}

FoldedAmbientTransfer read_folded(BinaryReader& r) {
  FoldedAmbientTransfer f;
  f.face_side = static_cast<int>(r.get<std::uint32_t>());
  if (f.face_side < 1 || !is_power_of_two(static_cast<std::uint64_t>(f.face_side)))
    throw FormatError("folded ambient transfer has an invalid face side");
  f.eta = r.get<double>();
  f.fraction = r.get<double>();
  f.domain_size = r.get<std::uint32_t>();
  f.columns.resize(r.get_count(4));
  for (auto& k : f.columns) {
    k.resize(r.get_count(24));
    if (k.size() != f.direction_count()) throw FormatError("folded ambient transfer has the wrong direction count");
    for (auto& s : k) {
      s = SparseSpectrum::read(r);
      if (s.size != f.domain_size) throw FormatError("folded ambient column does not match the domain");
    }
  }
  return f;
}

std::span<const std::uint8_t> bytes_of(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

std::vector<std::uint8_t> serialize_container(const PrecomputedScene& scene) {
  if (scene.transfer.count() != scene.basis.count())
    throw InvalidArgument("transfer and basis disagree on the basis count");
  BinaryWriter out;
  out.put_bytes(kMagic);
  out.put<std::uint32_t>(kContainerVersion);
  out.put_bytes(scene.mesh_hash);
  out.put<std::uint64_t>(scene.atlas.sample_count());
  out.put<std::uint32_t>(static_cast<std::uint32_t>(scene.basis.count()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(scene.atlas.part_count()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(scene.atlas.level()));
  const auto chunks = static_cast<std::uint32_t>(3 + scene.basis.count() + (scene.ambient ? 1 : 0));
  out.put<std::uint32_t>(chunks);

  {
    BinaryWriter w;
    scene.basis.write(w);
    put_chunk(out, kBasis, w);
  }
  {
    BinaryWriter w;
    scene.atlas.write(w);
    put_chunk(out, kAtlas, w);
  }
  for (int k = 0; k < scene.transfer.count(); ++k) {
    BinaryWriter w;
    write_block(w, static_cast<std::uint32_t>(k), scene.transfer);
    put_chunk(out, kTransfer, w);
  }
  if (scene.ambient) {
    BinaryWriter w;
    write_folded(w, *scene.ambient);
    put_chunk(out, kVisibility, w);
  }
  {
    BinaryWriter w;
    w.put_bytes(bytes_of(scene.meta_json));
    put_chunk(out, kMeta, w);
  }
  return out.take();
}

PrecomputedScene deserialize_container(std::span<const std::uint8_t> bytes) {
  BinaryReader r(bytes);
  const auto magic = r.get_bytes(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw FormatError("not a PRTS1 container");
  const auto version = r.get<std::uint32_t>();
  if (version != kContainerVersion)
    throw FormatError("unsupported container version " + std::to_string(version));
  PrecomputedScene scene;
  const auto hash = r.get_bytes(scene.mesh_hash.size());
  std::copy(hash.begin(), hash.end(), scene.mesh_hash.begin());
  const auto n = r.get<std::uint64_t>();
  const auto k_count = r.get<std::uint32_t>();
  const auto parts = r.get<std::uint32_t>();
  const auto level = r.get<std::uint32_t>();
  const auto chunks = r.get<std::uint32_t>();

  bool have_basis = false, have_atlas = false, have_meta = false;
  std::vector<TransferBlock> blocks;
  BlockHeader header;
  for (std::uint32_t c = 0; c < chunks; ++c) {
    Tag tag;
    const auto raw = r.get_bytes(4);
    std::memcpy(tag.data(), raw.data(), 4);
    const auto length = r.get<std::uint64_t>();
    if (length > r.remaining()) throw FormatError("corrupt file: chunk overruns the container");
    BinaryReader payload(r.get_bytes(static_cast<std::size_t>(length)));
    if (tag == kBasis) {
      scene.basis = DiffusionBasis::read(payload);
      have_basis = true;
    } else if (tag == kAtlas) {
      scene.atlas = QuadtreeAtlas::read(payload, static_cast<std::size_t>(n));
      have_atlas = true;
    } else if (tag == kTransfer) {
      BlockHeader h;
      blocks.push_back(read_block(payload, static_cast<std::uint32_t>(blocks.size()), h));
      if (blocks.size() > 1 && (h.domain != header.domain || h.step1_terms != header.step1_terms || h.fraction != header.fraction))
        throw FormatError("transfer chunks disagree on their parameters");
      header = h;
    } else if (tag == kVisibility) {
      scene.ambient = read_folded(payload);
    } else if (tag == kMeta) {
      const auto text = payload.get_bytes(payload.remaining());
      scene.meta_json.assign(text.begin(), text.end());
      have_meta = true;
      continue;
    } else {
      continue;  // unknown chunks are skipped
    }
    if (!payload.at_end()) throw FormatError("corrupt file: trailing bytes inside a chunk");
  }
  if (!r.at_end()) throw FormatError("corrupt file: trailing bytes after the last chunk");
  if (!have_basis || !have_atlas || !have_meta) throw FormatError("container is missing a required chunk");
  if (static_cast<std::uint32_t>(scene.basis.count()) != k_count || blocks.size() != k_count)
    throw FormatError("container basis count mismatch");
  if (static_cast<std::uint32_t>(scene.atlas.part_count()) != parts ||
      static_cast<std::uint32_t>(scene.atlas.level()) != level)
    throw FormatError("container atlas header mismatch");
  if (header.domain != scene.atlas.domain_size()) throw FormatError("transfer domain does not match the atlas");
  if (scene.ambient && (scene.ambient->columns.size() != k_count || scene.ambient->domain_size != header.domain))
    throw FormatError("folded ambient transfer does not match the transfer");
  scene.transfer = CompressedTransfer(header.domain, header.step1_terms, header.fraction, std::move(blocks));
  return scene;
}

namespace {

constexpr std::array<std::uint8_t, 8> kBasisMagic = {'P', 'R', 'T', 'B', '1', 0, 0, 0};

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path() && !std::filesystem::exists(path.parent_path()))
    throw IoError("output directory does not exist: " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_container(const std::filesystem::path& path, const PrecomputedScene& scene) {
  write_file(path, serialize_container(scene));
}

PrecomputedScene load_container(const std::filesystem::path& path, const TriangleMesh* mesh) {
  auto scene = deserialize_container(read_file(path));
  if (mesh != nullptr && mesh->hash() != scene.mesh_hash)
    throw HashMismatch("container was built for mesh " + to_hex(scene.mesh_hash) + ", got " + to_hex(mesh->hash()));
  return scene;
}

void save_basis(const std::filesystem::path& path, const DiffusionBasis& basis) {
  BinaryWriter w;
  w.put_bytes(kBasisMagic);
  w.put<std::uint32_t>(kContainerVersion);
  basis.write(w);
  write_file(path, w.bytes());
}

DiffusionBasis load_basis(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  BinaryReader r(bytes);
  const auto magic = r.get_bytes(kBasisMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kBasisMagic.begin())) throw FormatError(path.string() + " is not a basis file");
  if (r.get<std::uint32_t>() != kContainerVersion) throw FormatError("unsupported basis file version");
  auto basis = DiffusionBasis::read(r);
  if (!r.at_end()) throw FormatError("trailing bytes after basis data");
  return basis;
}

}  // namespace tprt
