// SPDX-License-Identifier: Apache-2.0
//
// Writes the bundled desk-scale meshes and the studio environment map.

#include "tprt/image.hpp"
#include "tprt/lighting.hpp"
#include "tprt/surface.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

namespace {

using tprt::TriangleMesh;
using tprt::Vec3;

// Z-up modelling frame to the Y-up frame the default camera expects.
void z_up_to_y_up(TriangleMesh& mesh) {
  for (auto& v : mesh.vertices) v = Vec3(v.x(), v.z(), -v.y());
  mesh.normals.clear();
  tprt::compute_vertex_normals(mesh);
}

TriangleMesh make_bust() {
  const std::array<TriangleMesh, 3> parts = {
      tprt::make_box(Vec3(-12.0, -5.0, 0.0), Vec3(12.0, 5.0, 8.0), 12),
      tprt::make_cylinder(Vec3(0.0, 0.0, 7.5), 3.5, 6.0, 8, 32),
      tprt::make_uv_sphere(Vec3(0.0, 0.0, 19.0), 7.0, 30, 48),
  };
  auto mesh = tprt::merge_meshes(parts);
  for (auto& v : mesh.vertices) v.z() -= 13.0;
  z_up_to_y_up(mesh);
  return mesh;
}

/// Cross-layout cubemap: dim sky gradient, warm ground bounce, one bright window.
tprt::ImageF make_studio(int side) {
  tprt::ImageF img;
  img.width = 4 * side;
  img.height = 3 * side;
  img.rgb.assign(static_cast<std::size_t>(img.width * img.height * 3), 0.0F);
  struct Block {
    int face, bx, by;
  };
  const std::array<Block, 6> blocks = {{{0, 2, 1}, {1, 0, 1}, {2, 1, 0}, {3, 1, 2}, {4, 1, 1}, {5, 3, 1}}};
  const Vec3 window = Vec3(0.4, 0.8, 0.45).normalized();
  for (const auto& b : blocks) {
    for (int row = 0; row < side; ++row) {
      for (int col = 0; col < side; ++col) {
        const Vec3 d = tprt::cubemap_direction(side, b.face, row, col);
        const double up = d.y();
        tprt::Rgb c = up >= 0.0 ? tprt::Rgb{0.25 + 0.35 * up, 0.3 + 0.4 * up, 0.4 + 0.6 * up}
                                : tprt::Rgb{0.22 - 0.1 * up, 0.17 - 0.05 * up, 0.12};
        if (d.dot(window) > 0.93) c = {12.0, 11.0, 9.5};
        const auto i = static_cast<std::size_t>(3 * ((b.by * side + row) * img.width + b.bx * side + col));
        for (int ch = 0; ch < 3; ++ch) img.rgb[i + static_cast<std::size_t>(ch)] = static_cast<float>(c[ch]);
      }
    }
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: tprt_make_assets <output-dir>\n";
    return 1;
  }
  const std::filesystem::path dir = argv[1];
  try {
    std::filesystem::create_directories(dir);
    tprt::save_obj(tprt::make_icosphere(4, 10.0), dir / "icosphere.obj");
    auto slab = tprt::make_box(Vec3(-20.0, -20.0, -1.0), Vec3(20.0, 20.0, 1.0), 20);
    tprt::save_obj(slab, dir / "slab.obj");
    tprt::save_obj(make_bust(), dir / "bust.obj");
    tprt::write_rgbe(make_studio(32), dir / "studio.hdr");
  } catch (const std::exception& e) {
    std::cerr << "tprt_make_assets: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
