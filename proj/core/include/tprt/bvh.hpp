// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/surface.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace tprt {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // need not be normalized; t is in units of direction
};

struct Hit {
  double t = 0.0;
  std::uint32_t triangle = 0;
};

/// Moller-Trumbore test, two-sided. Returns t of the hit inside (t_min, t_max).
[[nodiscard]] std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                                       double t_min, double t_max);

/// Bounding-volume hierarchy over a triangle mesh for shadow and visibility rays.
class RayAccelerator {
 public:
  RayAccelerator() = default;
  explicit RayAccelerator(const TriangleMesh& mesh);

  /// True if any triangle is hit with t in (t_min, t_max).
  [[nodiscard]] bool occluded(const Ray& ray, double t_min = 0.0,
                              double t_max = std::numeric_limits<double>::infinity()) const;
  [[nodiscard]] std::optional<Hit> closest(const Ray& ray, double t_min = 0.0,
                                           double t_max = std::numeric_limits<double>::infinity()) const;

  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] double scene_diagonal() const { return diagonal_; }

 private:
  struct Node {
    Vec3 lo;
    Vec3 hi;
    std::uint32_t first = 0;  // leaf: first primitive; interior: right child index
    std::uint32_t count = 0;  // 0 for interior nodes
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids);
  template <bool AnyHit>
  bool traverse(const Ray& ray, double t_min, double& t_max, std::uint32_t& tri) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<std::array<Vec3, 3>> tris_;
  double diagonal_ = 0.0;
};

[[nodiscard]] RayAccelerator build_accelerator(const TriangleMesh& mesh);

}  // namespace tprt
