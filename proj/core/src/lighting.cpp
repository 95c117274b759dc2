// SPDX-License-Identifier: Apache-2.0

#include "tprt/lighting.hpp"

#include "tprt/dipole.hpp"
#include "tprt/image.hpp"
#include "tprt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tprt {

Cubemap::Cubemap(int side_, const Rgb& fill) : side(side_) {
  for (int c = 0; c < kChannels; ++c) radiance[static_cast<std::size_t>(c)].assign(texel_count(), fill[static_cast<std::size_t>(c)]);
}

void Cubemap::validate() const {
  if (side < 1 || !is_power_of_two(static_cast<std::uint64_t>(side)))
    throw InvalidArgument("cubemap faces must be square with a power-of-two side");
  for (const auto& ch : radiance) {
    if (ch.size() != texel_count()) throw DimensionMismatch("cubemap channel has the wrong texel count");
    for (double v : ch)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("cubemap radiance must be finite and non-negative");
  }
}

Vec3 cubemap_direction(int side, int face, int row, int col) {
  const double u = 2.0 * (col + 0.5) / side - 1.0;
  const double v = 2.0 * (row + 0.5) / side - 1.0;
  Vec3 d;
  switch (face) {
    case 0: d = {1.0, -v, -u}; break;
    case 1: d = {-1.0, -v, u}; break;
    case 2: d = {u, 1.0, v}; break;
    case 3: d = {u, -1.0, -v}; break;
    case 4: d = {u, -v, 1.0}; break;
    default: d = {-u, -v, -1.0}; break;
  }
  return d.normalized();
}

double cubemap_texel_solid_angle(int side, int row, int col) {
  auto area = [](double x, double y) { return std::atan2(x * y, std::sqrt(x * x + y * y + 1.0)); };
  const double x0 = 2.0 * col / side - 1.0;
  const double x1 = 2.0 * (col + 1) / side - 1.0;
  const double y0 = 2.0 * row / side - 1.0;
  const double y1 = 2.0 * (row + 1) / side - 1.0;
  return area(x0, y0) - area(x0, y1) - area(x1, y0) + area(x1, y1);
}

std::size_t cubemap_lookup(int side, const Vec3& d) {
  const double ax = std::abs(d.x()), ay = std::abs(d.y()), az = std::abs(d.z());
  int face = 0;
  double u = 0.0, v = 0.0;
  if (ax >= ay && ax >= az) {
    face = d.x() > 0 ? 0 : 1;
    u = (d.x() > 0 ? -d.z() : d.z()) / ax;
    v = -d.y() / ax;
  } else if (ay >= az) {
    face = d.y() > 0 ? 2 : 3;
    u = d.x() / ay;
    v = (d.y() > 0 ? d.z() : -d.z()) / ay;
  } else {
    face = d.z() > 0 ? 4 : 5;
    u = (d.z() > 0 ? d.x() : -d.x()) / az;
    v = -d.y() / az;
  }
  const int col = std::clamp(static_cast<int>(std::floor((u + 1.0) * 0.5 * side)), 0, side - 1);
  const int row = std::clamp(static_cast<int>(std::floor((v + 1.0) * 0.5 * side)), 0, side - 1);
  return static_cast<std::size_t>(face) * static_cast<std::size_t>(side * side) + static_cast<std::size_t>(row * side + col);
}

DirectionSet make_direction_set(int face_side) {
  if (face_side < 1 || !is_power_of_two(static_cast<std::uint64_t>(face_side)))
    throw InvalidArgument("direction set face side must be a power of two");
  DirectionSet set;
  set.face_side = face_side;
  for (int f = 0; f < 6; ++f)
    for (int r = 0; r < face_side; ++r)
      for (int c = 0; c < face_side; ++c) {
        set.directions.push_back(cubemap_direction(face_side, f, r, c));
        set.solid_angle.push_back(cubemap_texel_solid_angle(face_side, r, c));
      }
  return set;
}

namespace {

ImageF load_any(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (ext == ".hdr" || ext == ".rgbe") return read_rgbe(path);
  if (ext == ".png") return read_png_linear(path);
  throw IoError("unsupported environment image type: " + path.string());
}

void copy_face(const ImageF& img, int x0, int y0, int side, int face, Cubemap& out) {
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const Rgb p = img.pixel(x0 + c, y0 + r);
      const auto t = static_cast<std::size_t>(face * side * side + r * side + c);
      for (int ch = 0; ch < kChannels; ++ch) out.radiance[static_cast<std::size_t>(ch)][t] = p[static_cast<std::size_t>(ch)];
    }
}

}  // namespace

Cubemap load_cubemap(const std::filesystem::path& path) {
  const ImageF img = load_any(path);
  if (img.width * 3 != img.height * 4) throw InvalidArgument("cross-layout cubemap must be 4s x 3s pixels");
  const int side = img.width / 4;
  Cubemap cube(side, {0.0, 0.0, 0.0});
  cube.validate();
  // (block x, block y) for +X, -X, +Y, -Y, +Z, -Z.
  constexpr int kBlocks[6][2] = {{2, 1}, {0, 1}, {1, 0}, {1, 2}, {1, 1}, {3, 1}};
  for (int f = 0; f < 6; ++f) copy_face(img, kBlocks[f][0] * side, kBlocks[f][1] * side, side, f, cube);
  return cube;
}

Cubemap load_cubemap_faces(std::span<const std::filesystem::path> faces) {
  if (faces.size() != 6) throw InvalidArgument("a cubemap needs exactly six face images");
  Cubemap cube;
  for (int f = 0; f < 6; ++f) {
    const ImageF img = load_any(faces[static_cast<std::size_t>(f)]);
    if (img.width != img.height) throw InvalidArgument("cubemap faces must be square");
    if (f == 0) {
      cube = Cubemap(img.width, {0.0, 0.0, 0.0});
      cube.validate();
    } else if (img.width != cube.side) {
      throw InvalidArgument("cubemap faces differ in size");
    }
    copy_face(img, 0, 0, cube.side, f, cube);
  }
  return cube;
}

void LightRig::validate() const {
  int ambient_count = 0;
  auto non_negative = [](const Rgb& v, const char* what) {
    for (double x : v)
      if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument(std::string(what) + " must be finite and non-negative");
  };
  for (const auto& light : lights) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, PointLight>) {
            non_negative(l.intensity, "point light intensity");
            if (!l.position.allFinite()) throw InvalidArgument("point light position must be finite");
          } else if constexpr (std::is_same_v<T, DirectionalLight>) {
            non_negative(l.irradiance, "directional light irradiance");
            if (std::abs(l.direction.norm() - 1.0) > 1e-6) throw InvalidArgument("light direction must be unit length");
          } else if constexpr (std::is_same_v<T, AmbientLight>) {
            ++ambient_count;
            l.environment.validate();
          } else {
            non_negative(l.radiance, "local light radiance");
            if (!(l.radius >= 0.0)) throw InvalidArgument("local light radius must be non-negative");
            if (!l.center.allFinite()) throw InvalidArgument("local light centre must be finite");
          }
        },
        light);
  }
  if (ambient_count > 1) throw InvalidArgument("at most one ambient light may be active");
}

const AmbientLight* LightRig::ambient() const {
  for (const auto& light : lights)
    if (const auto* a = std::get_if<AmbientLight>(&light)) return a;
  return nullptr;
}

namespace {

void orthonormal_frame(const Vec3& n, Vec3& t, Vec3& b) {
  const Vec3 helper = std::abs(n.x()) > 0.9 ? Vec3(0, 1, 0) : Vec3(1, 0, 0);
  t = helper.cross(n).normalized();
  b = n.cross(t);
}

// Portable uniform double in [0, 1).
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

ChannelVectors irradiance_direct(const SurfaceSamples& samples, const LightRig& rig, const RayAccelerator& accel,
                                 double eta, const IrradianceOptions& options) {
  rig.validate();
  const std::size_t n = samples.size();
  ChannelVectors e;
  for (auto& ch : e) ch.assign(n, 0.0);
  const double offset = options.ray_offset >= 0.0 ? options.ray_offset : 1e-4 * accel.scene_diagonal();
  const int strata = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(options.sphere_samples)))));
  const int sphere_count = strata * strata;

  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3& x = samples.positions[i];
      const Vec3& nrm = samples.normals[i];
      const Vec3 origin = x + offset * nrm;
      Rgb acc{0.0, 0.0, 0.0};
      for (const auto& light : rig.lights) {
        if (const auto* p = std::get_if<PointLight>(&light)) {
          const Vec3 w = p->position - x;
          const double d = w.norm();
          if (d <= 0.0) continue;
          const Vec3 dir = w / d;
          const double cosine = nrm.dot(dir);
          if (cosine <= 0.0) continue;
          const double reach = (p->position - origin).norm();
          if (accel.occluded({origin, dir}, 0.0, reach * (1.0 - 1e-9))) continue;
          const double scale = fresnel_transmittance(eta, cosine) * cosine / (d * d);
          for (int c = 0; c < kChannels; ++c) acc[static_cast<std::size_t>(c)] += p->intensity[static_cast<std::size_t>(c)] * scale;
        } else if (const auto* dl = std::get_if<DirectionalLight>(&light)) {
          const Vec3 dir = -dl->direction;
          const double cosine = nrm.dot(dir);
          if (cosine <= 0.0) continue;
          if (accel.occluded({origin, dir})) continue;
          const double scale = fresnel_transmittance(eta, cosine) * cosine;
          for (int c = 0; c < kChannels; ++c) acc[static_cast<std::size_t>(c)] += dl->irradiance[static_cast<std::size_t>(c)] * scale;
        } else if (const auto* s = std::get_if<LocalSphereLight>(&light)) {
          const Vec3 w = s->center - x;
          const double d = w.norm();
          if (d <= 0.0 || s->radius <= 0.0) continue;
          const Vec3 axis = w / d;
          const double cos_max = d > s->radius ? std::sqrt(std::max(0.0, 1.0 - (s->radius * s->radius) / (d * d))) : 0.0;
          const double cone = 2.0 * kPi * (1.0 - cos_max);
          Vec3 t, b;
          orthonormal_frame(axis, t, b);
          std::mt19937_64 rng(options.seed ^ (0x9E3779B97F4A7C15ull * (i + 1)));
          double sum = 0.0;
          for (int a = 0; a < strata; ++a) {
            for (int bb = 0; bb < strata; ++bb) {
              const double u1 = (a + uniform(rng)) / strata;
              const double u2 = (bb + uniform(rng)) / strata;
              const double ct = 1.0 - u1 * (1.0 - cos_max);
              const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
              const double phi = 2.0 * kPi * u2;
              const Vec3 dir = (st * std::cos(phi) * t + st * std::sin(phi) * b + ct * axis).normalized();
              const double cosine = nrm.dot(dir);
              if (cosine <= 0.0) continue;
              // Distance to the near side of the light sphere along dir.
              const Vec3 oc = origin - s->center;
              const double half_b = oc.dot(dir);
              const double disc = half_b * half_b - (oc.squaredNorm() - s->radius * s->radius);
              const double reach = disc > 0.0 ? std::max(0.0, -half_b - std::sqrt(disc)) : d;
              if (reach > 0.0 && accel.occluded({origin, dir}, 0.0, reach * (1.0 - 1e-9))) continue;
              sum += fresnel_transmittance(eta, cosine) * cosine;
            }
          }
          const double scale = sum * cone / sphere_count;
          for (int c = 0; c < kChannels; ++c) acc[static_cast<std::size_t>(c)] += s->radiance[static_cast<std::size_t>(c)] * scale;
        }
      }
      for (int c = 0; c < kChannels; ++c) e[static_cast<std::size_t>(c)][i] = acc[static_cast<std::size_t>(c)];
    }
  });
  return e;
}

EnvironmentSpectrum project_environment(const Cubemap& environment, std::size_t terms) {
  environment.validate();
  EnvironmentSpectrum out;
  out.face_side = environment.side;
  const std::size_t face = static_cast<std::size_t>(environment.side) * static_cast<std::size_t>(environment.side);
  for (int c = 0; c < kChannels; ++c) {
    std::vector<double> coeffs = environment.radiance[static_cast<std::size_t>(c)];
    for (int f = 0; f < 6; ++f)
      haar2d_inplace(std::span<double>(coeffs).subspan(static_cast<std::size_t>(f) * face, face), environment.side);
    out.channels[static_cast<std::size_t>(c)] = compress_top_n(coeffs, terms);
  }
  return out;
}

Cubemap reconstruct_environment(const EnvironmentSpectrum& spectrum) {
  Cubemap cube(spectrum.face_side, {0.0, 0.0, 0.0});
  const std::size_t face = static_cast<std::size_t>(cube.side) * static_cast<std::size_t>(cube.side);
  for (int c = 0; c < kChannels; ++c) {
    auto values = spectrum.channels[static_cast<std::size_t>(c)].dense();
    if (values.size() != cube.texel_count()) throw DimensionMismatch("environment spectrum size does not match its face side");
    for (int f = 0; f < 6; ++f)
      haar2d_inverse_inplace(std::span<double>(values).subspan(static_cast<std::size_t>(f) * face, face), cube.side);
    cube.radiance[static_cast<std::size_t>(c)] = std::move(values);
  }
  return cube;
}

}  // namespace tprt
