// SPDX-License-Identifier: Apache-2.0

#include "tprt/surface.hpp"

#include "tprt/binary_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace tprt {

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

double TriangleMesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

std::pair<Vec3, Vec3> TriangleMesh::bounds() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

MeshHash TriangleMesh::hash() const {
  BinaryWriter w;
  w.put<std::uint64_t>(vertices.size());
  for (const auto& v : vertices) {
    w.put(v.x());
    w.put(v.y());
    w.put(v.z());
  }
  w.put<std::uint64_t>(triangles.size());
  for (const auto& t : triangles)
    for (auto i : t) w.put(i);

  MeshHash out{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, w.bytes().data(), w.bytes().size());
  EVP_DigestFinal_ex(ctx, out.data(), &len);
  EVP_MD_CTX_free(ctx);
  return out;
}

std::string to_hex(const MeshHash& h) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (auto b : h) {
    s += kDigits[b >> 4];
    s += kDigits[b & 15];
  }
  return s;
}

void compute_vertex_normals(TriangleMesh& mesh) {
  mesh.normals.assign(mesh.vertices.size(), Vec3::Zero());
  for (const auto& t : mesh.triangles) {
    // Cross product length is twice the area, so this is area weighted.
    const Vec3 n = (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    for (auto i : t) mesh.normals[i] += n;
  }
  for (auto& n : mesh.normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
  }
}

void cleanup_mesh(TriangleMesh& mesh) {
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw InvalidArgument("mesh is empty");
  const auto [lo, hi] = mesh.bounds();
  const double eps = 1e-14 * (hi - lo).squaredNorm();

  std::vector<std::array<std::uint32_t, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    if (mesh.triangle_area(t) <= eps) continue;
    kept.push_back(tri);
  }
  if (kept.empty()) throw InvalidArgument("mesh has no non-degenerate triangles");

  // Drop vertices no triangle references.
  std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
  std::vector<Vec3> verts;
  std::vector<Vec3> norms;
  const bool has_normals = mesh.normals.size() == mesh.vertices.size();
  for (const auto& tri : kept)
    for (auto i : tri) remap[i] = 0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<std::int64_t>(verts.size());
    verts.push_back(mesh.vertices[i]);
    if (has_normals) norms.push_back(mesh.normals[i]);
  }
  for (auto& tri : kept)
    for (auto& i : tri) i = static_cast<std::uint32_t>(remap[i]);
  mesh.vertices = std::move(verts);
  mesh.triangles = std::move(kept);

  if (!has_normals) {
    compute_vertex_normals(mesh);
    return;
  }
  mesh.normals = std::move(norms);
  TriangleMesh face_normals = mesh;
  compute_vertex_normals(face_normals);
  for (std::size_t i = 0; i < mesh.normals.size(); ++i) {
    const double len = mesh.normals[i].norm();
    mesh.normals[i] = len > 0.0 ? Vec3(mesh.normals[i] / len) : face_normals.normals[i];
  }
}

namespace {

struct PositionKey {
  std::uint64_t x, y, z;
  bool operator==(const PositionKey&) const = default;
};

struct PositionKeyHash {
  std::size_t operator()(const PositionKey& k) const {
    std::size_t h = k.x * 0x9E3779B97F4A7C15ull;
    h ^= k.y + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h ^= k.z + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
  }
};

PositionKey key_of(const Vec3& p) {
  // +0.0 and -0.0 compare equal as positions.
  auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); };
  return {bits(p.x()), bits(p.y()), bits(p.z())};
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("OBJ line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) fail(line, "invalid number '" + std::string(tok) + "'");
  return v;
}

long parse_index(std::string_view tok, std::size_t line) {
  long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end || v == 0) fail(line, "invalid index '" + std::string(tok) + "'");
  return v;
}

std::size_t resolve(long idx, std::size_t count, std::size_t line) {
  const long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (resolved < 0 || static_cast<std::size_t>(resolved) >= count) fail(line, "index out of range");
  return static_cast<std::size_t>(resolved);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

TriangleMesh parse_obj(std::string_view text) {
  std::vector<Vec3> positions;
  std::vector<Vec3> file_normals;
  struct Corner {
    std::size_t v;
    std::int64_t n;
  };
  std::vector<std::array<Corner, 3>> faces;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    if (tok[0] == "v") {
      if (tok.size() < 4) fail(line_no, "vertex needs three coordinates");
      positions.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no), parse_double(tok[3], line_no));
    } else if (tok[0] == "vn") {
      if (tok.size() < 4) fail(line_no, "normal needs three components");
      file_normals.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no), parse_double(tok[3], line_no));
    } else if (tok[0] == "f") {
      if (tok.size() < 4) fail(line_no, "face needs at least three vertices");
      std::vector<Corner> poly;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const std::string_view t = tok[i];
        const auto s1 = t.find('/');
        const std::string_view vs = t.substr(0, s1);
        Corner c{resolve(parse_index(vs, line_no), positions.size(), line_no), -1};
        if (s1 != std::string_view::npos) {
          const auto s2 = t.find('/', s1 + 1);
          if (s2 != std::string_view::npos && s2 + 1 < t.size())
            c.n = static_cast<std::int64_t>(resolve(parse_index(t.substr(s2 + 1), line_no), file_normals.size(), line_no));
        }
        poly.push_back(c);
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) faces.push_back({poly[0], poly[i], poly[i + 1]});
    }
    // Everything else (vt, g, o, s, usemtl, ...) carries nothing we use.
    if (eol == text.size()) break;
  }
  if (faces.empty()) throw ParseError("OBJ contains no faces");

  TriangleMesh mesh;
  std::unordered_map<PositionKey, std::uint32_t, PositionKeyHash> dedupe;
  std::vector<std::uint32_t> remap(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    auto [it, inserted] = dedupe.try_emplace(key_of(positions[i]), static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(positions[i]);
    remap[i] = it->second;
  }

  bool any_normal = false;
  std::vector<Vec3> accum(mesh.vertices.size(), Vec3::Zero());
  for (const auto& f : faces) {
    std::array<std::uint32_t, 3> tri{};
    for (int c = 0; c < 3; ++c) {
      tri[static_cast<std::size_t>(c)] = remap[f[static_cast<std::size_t>(c)].v];
      if (f[static_cast<std::size_t>(c)].n >= 0) {
        any_normal = true;
        accum[tri[static_cast<std::size_t>(c)]] += file_normals[static_cast<std::size_t>(f[static_cast<std::size_t>(c)].n)];
      }
    }
    mesh.triangles.push_back(tri);
  }
  if (any_normal) mesh.normals = std::move(accum);
  cleanup_mesh(mesh);
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_obj(ss.str());
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  const bool normals = mesh.normals.size() == mesh.vertices.size();
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (auto i : t) {
      out << ' ' << i + 1;
      if (normals) out << "//" << i + 1;
    }
    out << '\n';
  }
}

TriangleMesh make_icosphere(int subdivisions, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<std::uint32_t, 3>> f = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto [it, inserted] = mid.try_emplace({key.first, key.second}, static_cast<std::uint32_t>(v.size()));
      if (inserted) v.push_back((v[a] + v[b]).normalized());
      return it->second;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const auto ab = midpoint(tri[0], tri[1]);
      const auto bc = midpoint(tri[1], tri[2]);
      const auto ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  TriangleMesh mesh;
  mesh.normals = v;
  for (auto& p : v) p *= radius;
  mesh.vertices = std::move(v);
  mesh.triangles = std::move(f);
  return mesh;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi, int segments) {
  TriangleMesh mesh;
  std::unordered_map<PositionKey, std::uint32_t, PositionKeyHash> index;
  auto vertex = [&](const Vec3& p) {
    auto [it, inserted] = index.try_emplace(key_of(p), static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(p);
    return it->second;
  };
  auto coord = [&](int axis, int i) { return lo[axis] + (hi[axis] - lo[axis]) * i / segments; };
  // Each face: fixed axis at lo or hi, two running axes, outward orientation.
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const int u = (axis + 1) % 3;
      const int w = (axis + 2) % 3;
      for (int i = 0; i < segments; ++i) {
        for (int j = 0; j < segments; ++j) {
          std::array<std::uint32_t, 4> q{};
          const int du[4] = {0, 1, 1, 0};
          const int dw[4] = {0, 0, 1, 1};
          for (int c = 0; c < 4; ++c) {
            Vec3 p;
            p[axis] = side == 0 ? lo[axis] : hi[axis];
            p[u] = coord(u, i + du[c]);
            p[w] = coord(w, j + dw[c]);
            q[static_cast<std::size_t>(c)] = vertex(p);
          }
          if (side == 1) {
            mesh.triangles.push_back({q[0], q[1], q[2]});
            mesh.triangles.push_back({q[0], q[2], q[3]});
          } else {
            mesh.triangles.push_back({q[0], q[2], q[1]});
            mesh.triangles.push_back({q[0], q[3], q[2]});
          }
        }
      }
    }
  }
  compute_vertex_normals(mesh);
  return mesh;
}

TriangleMesh make_uv_sphere(const Vec3& center, double radius, int rings, int segments) {
  TriangleMesh mesh;
  mesh.vertices.push_back(center + Vec3(0, 0, radius));
  for (int r = 1; r < rings; ++r) {
    const double theta = kPi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double phi = 2.0 * kPi * s / segments;
      mesh.vertices.push_back(center + radius * Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)));
    }
  }
  mesh.vertices.push_back(center - Vec3(0, 0, radius));
  const auto south = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  auto ring_vertex = [&](int r, int s) { return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments)); };
  for (int s = 0; s < segments; ++s) mesh.triangles.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const auto a = ring_vertex(r, s), b = ring_vertex(r, s + 1), c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      mesh.triangles.push_back({a, c, d});
      mesh.triangles.push_back({a, d, b});
    }
  }
  for (int s = 0; s < segments; ++s) mesh.triangles.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  mesh.normals.clear();
  for (const auto& p : mesh.vertices) mesh.normals.push_back((p - center).normalized());
  return mesh;
}

TriangleMesh make_cylinder(const Vec3& base, double radius, double height, int rings, int segments) {
  TriangleMesh mesh;
  for (int r = 0; r <= rings; ++r) {
    const double z = height * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double phi = 2.0 * kPi * s / segments;
      mesh.vertices.push_back(base + Vec3(radius * std::cos(phi), radius * std::sin(phi), z));
      mesh.normals.emplace_back(std::cos(phi), std::sin(phi), 0.0);
    }
  }
  auto idx = [&](int r, int s) { return static_cast<std::uint32_t>(r * segments + (s % segments)); };
  for (int r = 0; r < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      mesh.triangles.push_back({idx(r, s), idx(r, s + 1), idx(r + 1, s + 1)});
      mesh.triangles.push_back({idx(r, s), idx(r + 1, s + 1), idx(r + 1, s)});
    }
  }
  return mesh;
}

TriangleMesh merge_meshes(std::span<const TriangleMesh> parts) {
  TriangleMesh out;
  for (const auto& p : parts) {
    const auto offset = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), p.vertices.begin(), p.vertices.end());
    out.normals.insert(out.normals.end(), p.normals.begin(), p.normals.end());
    for (auto t : p.triangles) {
      for (auto& i : t) i += offset;
      out.triangles.push_back(t);
    }
  }
  return out;
}

double SurfaceSamples::total_area() const { return std::accumulate(area.begin(), area.end(), 0.0); }

SurfaceSamples sample_surface(const TriangleMesh& mesh) {
  SurfaceSamples s;
  s.positions = mesh.vertices;
  s.normals = mesh.normals;
  if (s.normals.size() != s.positions.size()) {
    TriangleMesh tmp = mesh;
    compute_vertex_normals(tmp);
    s.normals = tmp.normals;
  }
  s.area.assign(mesh.vertices.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double a = mesh.triangle_area(t) / 3.0;
    for (auto i : mesh.triangles[t]) s.area[i] += a;
  }
  s.source_vertex.resize(mesh.vertices.size());
  std::iota(s.source_vertex.begin(), s.source_vertex.end(), 0u);
  return s;
}

namespace {

int longest_axis(std::span<const Vec3> points, std::span<const std::uint32_t> ids) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (auto i : ids) {
    lo = lo.cwiseMin(points[i]);
    hi = hi.cwiseMax(points[i]);
  }
  const Vec3 ext = hi - lo;
  int axis = 0;
  if (ext.y() > ext[axis]) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  return axis;
}

// Reorders ids so that the first `count` are the smallest along the longest
// axis (ties by id).
void split_at(std::span<const Vec3> points, std::span<std::uint32_t> ids, std::size_t count) {
  if (count == 0 || count >= ids.size()) return;
  const int axis = longest_axis(points, ids);
  std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count), ids.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points[a][axis];
                     const double pb = points[b][axis];
                     return pa != pb ? pa < pb : a < b;
                   });
}

void bisect(std::span<const Vec3> points, std::span<std::uint32_t> ids, int parts, std::uint32_t first_label,
            std::vector<std::uint32_t>& labels) {
  if (parts == 1) {
    for (auto i : ids) labels[i] = first_label;
    return;
  }
  const std::size_t left = (ids.size() + 1) / 2;
  split_at(points, ids, left);
  bisect(points, ids.first(left), parts / 2, first_label, labels);
  bisect(points, ids.subspan(left), parts / 2, first_label + static_cast<std::uint32_t>(parts / 2), labels);
}

int round_up_pow2(int m) {
  int p = 1;
  while (p < m) p *= 2;
  return p;
}

// Places ids into the Morton range [base, base + 4^level), filling child
// quadrants in order up to their capacity. Full nodes split at the medians.
void place_quadtree(std::span<const Vec3> points, std::span<std::uint32_t> ids, int level, std::uint32_t base,
                    std::vector<std::uint32_t>& morton_of) {
  if (ids.empty()) return;
  if (level == 0) {
    morton_of[ids[0]] = base;
    return;
  }
  const std::size_t cap = std::size_t{1} << (2 * (level - 1));
  std::array<std::size_t, 4> count{};
  std::size_t rest = ids.size();
  for (auto& c : count) {
    c = std::min(rest, cap);
    rest -= c;
  }
  // Top pair (children 0,1) vs bottom pair (2,3), then left vs right in each.
  split_at(points, ids, count[0] + count[1]);
  auto top = ids.first(count[0] + count[1]);
  auto bottom = ids.subspan(count[0] + count[1]);
  split_at(points, top, count[0]);
  split_at(points, bottom, count[2]);
  std::size_t offset = 0;
  for (std::uint32_t c = 0; c < 4; ++c) {
    place_quadtree(points, ids.subspan(offset, count[c]), level - 1,
                   base + c * static_cast<std::uint32_t>(cap), morton_of);
    offset += count[c];
  }
}

}  // namespace

std::vector<std::uint32_t> partition_points(std::span<const Vec3> points, int m) {
  if (m < 1) throw InvalidArgument("part count must be at least 1");
  std::vector<std::uint32_t> labels(points.size(), 0);
  std::vector<std::uint32_t> ids(points.size());
  std::iota(ids.begin(), ids.end(), 0u);
  bisect(points, ids, round_up_pow2(m), 0, labels);
  return labels;
}

int default_level(std::size_t sample_count, int parts) {
  const std::size_t p = static_cast<std::size_t>(round_up_pow2(parts));
  const std::size_t per_part = (sample_count + p - 1) / p;
  int n = 0;
  while ((std::size_t{1} << (2 * n)) < per_part) ++n;
  return n;
}

std::uint32_t morton_encode(std::uint32_t row, std::uint32_t col) {
  std::uint32_t code = 0;
  for (int b = 0; b < 16; ++b) {
    code |= ((col >> b) & 1u) << (2 * b);
    code |= ((row >> b) & 1u) << (2 * b + 1);
  }
  return code;
}

void morton_decode(std::uint32_t code, std::uint32_t& row, std::uint32_t& col) {
  row = 0;
  col = 0;
  for (int b = 0; b < 16; ++b) {
    col |= ((code >> (2 * b)) & 1u) << b;
    row |= ((code >> (2 * b + 1)) & 1u) << b;
  }
}

QuadtreeAtlas::QuadtreeAtlas(int part_count, int level, std::vector<AtlasCell> assignment)
    : part_count_(part_count), level_(level), assignment_(std::move(assignment)) {
  const std::size_t cells = cells_per_part();
  inverse_.assign(cells * static_cast<std::size_t>(part_count_), kPad);
  domain_index_.resize(assignment_.size());
  for (std::size_t s = 0; s < assignment_.size(); ++s) {
    const auto& c = assignment_[s];
    if (c.part >= static_cast<std::uint32_t>(part_count_) || c.row >= static_cast<std::uint32_t>(side()) ||
        c.col >= static_cast<std::uint32_t>(side()))
      throw InvalidArgument("atlas cell out of range");
    const std::size_t idx = c.part * cells + c.row * static_cast<std::size_t>(side()) + c.col;
    if (inverse_[idx] != kPad) throw InvalidArgument("two samples share one atlas cell");
    inverse_[idx] = static_cast<std::int32_t>(s);
    domain_index_[s] = idx;
  }
}

std::int32_t QuadtreeAtlas::sample_at(int part, int row, int col) const {
  return inverse_[static_cast<std::size_t>(part) * cells_per_part() + static_cast<std::size_t>(row * side() + col)];
}

std::span<const std::int32_t> QuadtreeAtlas::inverse(int part) const {
  return std::span<const std::int32_t>(inverse_).subspan(static_cast<std::size_t>(part) * cells_per_part(), cells_per_part());
}

std::size_t QuadtreeAtlas::part_sample_count(int part) const {
  const auto inv = inverse(part);
  return static_cast<std::size_t>(std::count_if(inv.begin(), inv.end(), [](std::int32_t s) { return s != kPad; }));
}

std::vector<std::uint32_t> QuadtreeAtlas::atlas_order() const {
  std::vector<std::uint32_t> out;
  out.reserve(assignment_.size());
  for (auto s : inverse_)
    if (s != kPad) out.push_back(static_cast<std::uint32_t>(s));
  return out;
}

void QuadtreeAtlas::write(BinaryWriter& out) const {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(part_count_));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(level_));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(assignment_.size()));
  for (const auto& c : assignment_) {
    out.put<std::uint32_t>(c.part);
    out.put<std::uint32_t>(c.row * static_cast<std::uint32_t>(side()) + c.col);
  }
}

QuadtreeAtlas QuadtreeAtlas::read(BinaryReader& in, std::size_t expected_samples) {
  const auto parts = static_cast<int>(in.get<std::uint32_t>());
  const auto level = static_cast<int>(in.get<std::uint32_t>());
  const std::size_t n = in.get_count(8);
  if (parts < 1 || parts > 4096 || level < 0 || level > 15) throw FormatError("corrupt atlas chunk");
  if (n != expected_samples) throw FormatError("atlas sample count does not match header");
  const std::uint32_t side = 1u << level;
  std::vector<AtlasCell> cells(n);
  for (auto& c : cells) {
    c.part = in.get<std::uint32_t>();
    const auto cell = in.get<std::uint32_t>();
    c.row = cell / side;
    c.col = cell % side;
  }
  try {
    return QuadtreeAtlas(parts, level, std::move(cells));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("corrupt atlas chunk: ") + e.what());
  }
}

QuadtreeAtlas build_quadtree_atlas(std::span<const Vec3> positions, int m, int n) {
  if (n < 0 || n > 15) throw InvalidArgument("quadtree level out of range");
  const auto labels = partition_points(positions, m);
  const int parts = round_up_pow2(m);
  std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(parts));
  for (std::uint32_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  const std::size_t capacity = std::size_t{1} << (2 * n);
  std::vector<std::uint32_t> morton_of(positions.size(), 0);
  for (const auto& ids : members) {
    if (ids.size() > capacity)
      throw InvalidArgument("atlas overflow: a part holds " + std::to_string(ids.size()) +
                            " samples but a 2^n x 2^n grid has only " + std::to_string(capacity) + " cells");
    std::vector<std::uint32_t> work = ids;
    place_quadtree(positions, work, n, 0, morton_of);
  }
  std::vector<AtlasCell> cells(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    std::uint32_t row = 0, col = 0;
    morton_decode(morton_of[i], row, col);
    cells[i] = {labels[i], row, col};
  }
  return QuadtreeAtlas(parts, n, std::move(cells));
}

std::vector<double> flatten(const QuadtreeAtlas& atlas, int part, std::span<const double> values) {
  if (values.size() != atlas.sample_count()) throw DimensionMismatch("value vector does not cover the atlas samples");
  const auto inv = atlas.inverse(part);
  std::vector<double> grid(inv.size(), 0.0);
  for (std::size_t c = 0; c < inv.size(); ++c)
    if (inv[c] != QuadtreeAtlas::kPad) grid[c] = values[static_cast<std::size_t>(inv[c])];
  return grid;
}

void unflatten(const QuadtreeAtlas& atlas, int part, std::span<const double> grid, std::span<double> values) {
  const auto inv = atlas.inverse(part);
  if (grid.size() != inv.size()) throw DimensionMismatch("grid size does not match the atlas part");
  if (values.size() != atlas.sample_count()) throw DimensionMismatch("value vector does not cover the atlas samples");
  for (std::size_t c = 0; c < inv.size(); ++c)
    if (inv[c] != QuadtreeAtlas::kPad) values[static_cast<std::size_t>(inv[c])] = grid[c];
}

void flatten_all_into(const QuadtreeAtlas& atlas, std::span<const double> values, std::span<double> domain) {
  if (values.size() != atlas.sample_count()) throw DimensionMismatch("value vector does not cover the atlas samples");
  if (domain.size() != atlas.domain_size()) throw DimensionMismatch("domain buffer has the wrong length");
  std::fill(domain.begin(), domain.end(), 0.0);
  for (std::size_t s = 0; s < values.size(); ++s) domain[atlas.domain_index(s)] = values[s];
}

std::vector<double> flatten_all(const QuadtreeAtlas& atlas, std::span<const double> values) {
  std::vector<double> domain(atlas.domain_size());
  flatten_all_into(atlas, values, domain);
  return domain;
}

std::vector<double> unflatten_all(const QuadtreeAtlas& atlas, std::span<const double> domain) {
  if (domain.size() != atlas.domain_size()) throw DimensionMismatch("domain buffer has the wrong length");
  std::vector<double> values(atlas.sample_count());
  for (std::size_t s = 0; s < values.size(); ++s) values[s] = domain[atlas.domain_index(s)];
  return values;
}

}  // namespace tprt
