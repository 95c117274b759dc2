// SPDX-License-Identifier: Apache-2.0

#include "tprt/bvh.hpp"

#include <algorithm>
#include <numeric>

namespace tprt {

std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c, double t_min,
                                         double t_max) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = ray.direction.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = ray.direction.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t <= t_min || t >= t_max) return std::nullopt;
  return t;
}

namespace {

constexpr std::uint32_t kLeafSize = 4;

bool hit_box(const Vec3& lo, const Vec3& hi, const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (lo[a] - origin[a]) * inv_dir[a];
    double t1 = (hi[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf leaves the interval untouched.
    if (t0 > t_min) t_min = t0;
    if (t1 < t_max) t_max = t1;
    if (t_min > t_max) return false;
  }
  return true;
}

}  // namespace

RayAccelerator::RayAccelerator(const TriangleMesh& mesh) {
  tris_.reserve(mesh.triangles.size());
  std::vector<Vec3> centroids;
  centroids.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]});
    centroids.push_back((tris_.back()[0] + tris_.back()[1] + tris_.back()[2]) / 3.0);
  }
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!tris_.empty()) {
    nodes_.reserve(2 * tris_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(tris_.size()), centroids);
    diagonal_ = (nodes_[0].hi - nodes_[0].lo).norm();
  }
}

std::uint32_t RayAccelerator::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  Vec3 clo = lo;
  Vec3 chi = hi;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (const auto& v : tris_[order_[i]]) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    clo = clo.cwiseMin(centroids[order_[i]]);
    chi = chi.cwiseMax(centroids[order_[i]]);
  }
  nodes_[index].lo = lo;
  nodes_[index].hi = hi;

  const Vec3 ext = chi - clo;
  int axis = 0;
  if (ext.y() > ext[axis]) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  if (end - begin <= kLeafSize || ext[axis] <= 0.0) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return centroids[a][axis] < centroids[b][axis]; });
  build(begin, mid, centroids);
  const std::uint32_t right = build(mid, end, centroids);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

template <bool AnyHit>
bool RayAccelerator::traverse(const Ray& ray, double t_min, double& t_max, std::uint32_t& tri) const {
  if (nodes_.empty()) return false;
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  bool found = false;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!hit_box(node.lo, node.hi, ray.origin, inv_dir, t_min, t_max)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto& t = tris_[order_[i]];
        if (auto h = intersect_triangle(ray, t[0], t[1], t[2], t_min, t_max)) {
          found = true;
          tri = order_[i];
          t_max = *h;
          if constexpr (AnyHit) return true;
        }
      }
    } else {
      const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;
      stack[top++] = self + 1;
    }
  }
  return found;
}

bool RayAccelerator::occluded(const Ray& ray, double t_min, double t_max) const {
  std::uint32_t tri = 0;
  return traverse<true>(ray, t_min, t_max, tri);
}

std::optional<Hit> RayAccelerator::closest(const Ray& ray, double t_min, double t_max) const {
  std::uint32_t tri = 0;
  if (!traverse<false>(ray, t_min, t_max, tri)) return std::nullopt;
  return Hit{t_max, tri};
}

RayAccelerator build_accelerator(const TriangleMesh& mesh) { return RayAccelerator(mesh); }

}  // namespace tprt
