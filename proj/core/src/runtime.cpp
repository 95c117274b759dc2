// SPDX-License-Identifier: Apache-2.0

#include "tprt/runtime.hpp"

#include "tprt/dipole.hpp"
#include "tprt/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace tprt {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

std::shared_ptr<const SceneAssets> SceneAssets::assemble(TriangleMesh mesh, PrecomputedScene pre) {
  auto assets = std::make_shared<SceneAssets>();
  assets->samples = sample_surface(mesh);
  if (pre.atlas.sample_count() != assets->samples.size())
    throw DimensionMismatch("container atlas does not cover the mesh samples");
  assets->accel = build_accelerator(mesh);
  assets->mesh = std::move(mesh);
  assets->atlas = std::move(pre.atlas);
  assets->basis = std::move(pre.basis);
  assets->transfer = std::move(pre.transfer);
  assets->ambient = std::move(pre.ambient);
  assets->meta_json = std::move(pre.meta_json);
  return assets;
}

void Camera::validate() const {
  const Vec3 forward = target - position;
  if (!position.allFinite() || !target.allFinite() || !up.allFinite())
    throw InvalidArgument("camera vectors must be finite");
  if (forward.norm() <= 1e-12) throw InvalidArgument("camera position and target coincide");
  if (up.norm() <= 1e-12 || forward.normalized().cross(up.normalized()).norm() <= 1e-9)
    throw InvalidArgument("camera up vector is zero or parallel to the view direction");
  if (!(fov_degrees > 0.0 && fov_degrees < 180.0)) throw InvalidArgument("camera field of view must lie in (0, 180)");
}

Relighter::Relighter(std::shared_ptr<const SceneAssets> assets, OpticalMaterial material, LightRig lights,
                     Camera camera, RuntimeOptions options)
    : assets_(std::move(assets)), lights_(std::move(lights)), camera_(camera), options_(options) {
  if (!assets_) throw InvalidArgument("relighter needs scene assets");
  if (assets_->transfer.count() != assets_->basis.count()) throw DimensionMismatch("transfer and basis disagree on K");
  if (assets_->transfer.domain_size() != assets_->atlas.domain_size())
    throw DimensionMismatch("transfer domain does not match the atlas");
  material.validate();
  material_clamped_ = assets_->basis.box.clamp(material);
  material_ = material;
  lights_.validate();
  if (lights_.ambient() && !assets_->ambient)
    throw InvalidArgument("ambient light needs a container with precomputed visibility");
  camera_.validate();
  frame_.stats.transfer = assets_->transfer.stats();
  relight();
}

const FrameResult& Relighter::relight() {
  const auto& a = *assets_;
  frame_.timings = {};
  frame_.edit_path = false;

  auto t = Clock::now();
  irradiance_ = irradiance_direct(a.samples, lights_, a.accel, material_.eta, options_.irradiance);
  const std::size_t domain = a.atlas.domain_size();
  const std::size_t terms = options_.irradiance_keep_all ? domain : retained_count(domain, options_.irradiance_fraction);
  std::array<SparseSpectrum, kChannels> e_w0;
  for (int c = 0; c < kChannels; ++c) {
    const auto coeffs = project_domain(Wavelet::Haar, a.atlas, irradiance_[static_cast<std::size_t>(c)]);
    auto& s = e_w0[static_cast<std::size_t>(c)];
    s = compress_top_n(coeffs, terms);
    frame_.stats.irradiance_energy[static_cast<std::size_t>(c)] = s.total_energy > 0.0 ? s.kept_energy / s.total_energy : 1.0;
  }
  frame_.stats.irradiance_terms = terms;
  std::optional<EnvironmentSpectrum> env;
  if (const auto* amb = lights_.ambient()) {
    if (!a.ambient) throw InvalidArgument("ambient light needs a container with precomputed visibility");
    env = project_environment(resample_cubemap(amb->environment, a.ambient->face_side), options_.environment_terms);
  }
  frame_.timings.irradiance = ms_since(t);

  t = Clock::now();
  v_.assign(static_cast<std::size_t>(a.transfer.count()), {});
  parallel_for(v_.size() * kChannels, [&](std::size_t begin, std::size_t end) {
    for (std::size_t task = begin; task < end; ++task) {
      const std::size_t k = task / kChannels;
      const std::size_t c = task % kChannels;
      auto& out = v_[k][c];
      out.assign(domain, 0.0);
      a.transfer.apply(static_cast<int>(k), e_w0[c], out);
      if (env) a.ambient->apply(static_cast<int>(k), env->channels[c], out);
    }
  });
  frame_.timings.transfer = ms_since(t);

  compute_weighted_stage();
  shade();
  return frame_;
}

void Relighter::compute_weighted_stage() {
  const auto& a = *assets_;
  auto t = Clock::now();
  weights_ = project_material(a.basis, material_);
  const std::size_t domain = a.atlas.domain_size();
  std::array<std::vector<double>, kChannels> acc;
  for (int c = 0; c < kChannels; ++c) {
    auto& sum = acc[static_cast<std::size_t>(c)];
    sum.assign(domain, 0.0);
    const auto& s = weights_.s[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < v_.size(); ++k) {
      const double w = s[k];
      const auto& v = v_[k][static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < domain; ++i) sum[i] += w * v[i];
    }
  }
  frame_.timings.weighting = ms_since(t);

  t = Clock::now();
  for (int c = 0; c < kChannels; ++c)
    scattered_[static_cast<std::size_t>(c)] = unproject_domain(Wavelet::Cdf97, a.atlas, acc[static_cast<std::size_t>(c)]);
  frame_.timings.inverse_wavelet = ms_since(t);
  frame_.stats.material_clamped = material_clamped_;
}

void Relighter::shade() {
  const auto t = Clock::now();
  frame_.unclamped = shade_samples(assets_->samples, scattered_, camera_, material_.eta);
  for (int c = 0; c < kChannels; ++c) {
    auto& out = frame_.radiance[static_cast<std::size_t>(c)];
    const auto& in = frame_.unclamped[static_cast<std::size_t>(c)];
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::max(0.0, in[i]);
  }
  frame_.timings.raster = ms_since(t);
}

const FrameResult& Relighter::set_material(const OpticalMaterial& material) {
  material.validate();
  OpticalMaterial m = material;
  const bool clamped = assets_->basis.box.clamp(m);
  const bool eta_changed = m.eta != material_.eta;
  material_ = m;
  material_clamped_ = clamped;
  if (eta_changed) return relight();
  frame_.timings = {};
  frame_.edit_path = true;
  compute_weighted_stage();
  shade();
  return frame_;
}

const FrameResult& Relighter::set_lights(LightRig lights) {
  lights.validate();
  if (lights.ambient() && !assets_->ambient)
    throw InvalidArgument("ambient light needs a container with precomputed visibility");
  lights_ = std::move(lights);
  return relight();
}

const FrameResult& Relighter::set_camera(const Camera& camera) {
  camera.validate();
  camera_ = camera;
  frame_.timings = {};
  frame_.edit_path = true;
  shade();
  return frame_;
}

ChannelVectors shade_samples(const SurfaceSamples& samples, const ChannelVectors& scattered, const Camera& camera,
                             double eta) {
  ChannelVectors out;
  const std::size_t n = samples.size();
  std::vector<double> factor(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 view = camera.position - samples.positions[i];
    const double len = view.norm();
    const double cosine = len > 0.0 ? std::clamp(samples.normals[i].dot(view) / len, 0.0, 1.0) : 0.0;
    factor[i] = fresnel_transmittance(eta, cosine) / kPi;
  }
  for (int c = 0; c < kChannels; ++c) {
    const auto& in = scattered[static_cast<std::size_t>(c)];
    if (in.size() != n) throw DimensionMismatch("scattered radiance does not cover the samples");
    auto& o = out[static_cast<std::size_t>(c)];
    o.resize(n);
    for (std::size_t i = 0; i < n; ++i) o[i] = in[i] * factor[i];
  }
  return out;
}

Image8 render_image(const TriangleMesh& mesh, const SurfaceSamples& samples, const ChannelVectors& radiance,
                    const Camera& camera, const RasterOptions& options) {
  camera.validate();
  if (options.width < 1 || options.height < 1) throw InvalidArgument("image size must be positive");
  for (const auto& ch : radiance)
    if (ch.size() != samples.size()) throw DimensionMismatch("radiance does not cover the samples");

  // Per-vertex colours from the samples that own them.
  std::vector<Rgb> color(mesh.vertices.size(), Rgb{0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (int c = 0; c < kChannels; ++c) color[samples.source_vertex[i]][static_cast<std::size_t>(c)] = radiance[static_cast<std::size_t>(c)][i];

  const Vec3 forward = (camera.target - camera.position).normalized();
  const Vec3 right = forward.cross(camera.up).normalized();
  const Vec3 up = right.cross(forward);
  const double focal = 1.0 / std::tan(0.5 * camera.fov_degrees * kPi / 180.0);
  const double aspect = static_cast<double>(options.width) / options.height;
  const double near_plane = 1e-6 * std::max(1.0, (camera.target - camera.position).norm());

  struct Projected {
    double x, y, inv_z;
    bool valid;
  };
  std::vector<Projected> proj(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3 d = mesh.vertices[v] - camera.position;
    const double z = d.dot(forward);
    if (z <= near_plane) {
      proj[v] = {0.0, 0.0, 0.0, false};
      continue;
    }
    const double nx = focal * d.dot(right) / (z * aspect);
    const double ny = focal * d.dot(up) / z;
    proj[v] = {(nx + 1.0) * 0.5 * options.width, (1.0 - ny) * 0.5 * options.height, 1.0 / z, true};
  }

  const auto w = static_cast<std::size_t>(options.width);
  const auto h = static_cast<std::size_t>(options.height);
  std::vector<double> depth(w * h, 0.0);  // stores 1/z; larger is closer
  std::vector<Rgb> pixels(w * h, options.background);

  auto edge = [](const Projected& a, const Projected& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
  };
  // Top-left fill convention in a y-down raster with a positive-area winding.
  auto top_left = [](const Projected& a, const Projected& b) {
    const double dy = b.y - a.y;
    const double dx = b.x - a.x;
    return (dy == 0.0 && dx < 0.0) || dy > 0.0;
  };

  for (const auto& tri : mesh.triangles) {
    Projected p0 = proj[tri[0]], p1 = proj[tri[1]], p2 = proj[tri[2]];
    if (!p0.valid || !p1.valid || !p2.valid) continue;
    std::array<std::uint32_t, 3> idx = tri;
    double area = edge(p0, p1, p2.x, p2.y);
    if (area == 0.0) continue;
    if (area < 0.0) {
      std::swap(p1, p2);
      std::swap(idx[1], idx[2]);
      area = -area;
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({p0.x, p1.x, p2.x}))));
    const int x1 = std::min(options.width - 1, static_cast<int>(std::ceil(std::max({p0.x, p1.x, p2.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({p0.y, p1.y, p2.y}))));
    const int y1 = std::min(options.height - 1, static_cast<int>(std::ceil(std::max({p0.y, p1.y, p2.y}))));
    const bool tl0 = top_left(p1, p2), tl1 = top_left(p2, p0), tl2 = top_left(p0, p1);
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = edge(p1, p2, px, py);
        const double w1 = edge(p2, p0, px, py);
        const double w2 = edge(p0, p1, px, py);
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        if ((w0 == 0.0 && !tl0) || (w1 == 0.0 && !tl1) || (w2 == 0.0 && !tl2)) continue;
        const double b0 = w0 / area, b1 = w1 / area, b2 = w2 / area;
        const double inv_z = b0 * p0.inv_z + b1 * p1.inv_z + b2 * p2.inv_z;
        const std::size_t pix = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
        if (inv_z <= depth[pix]) continue;
        depth[pix] = inv_z;
        const double q0 = b0 * p0.inv_z / inv_z, q1 = b1 * p1.inv_z / inv_z, q2 = b2 * p2.inv_z / inv_z;
        for (int c = 0; c < kChannels; ++c) {
          const auto cc = static_cast<std::size_t>(c);
          pixels[pix][cc] = q0 * color[idx[0]][cc] + q1 * color[idx[1]][cc] + q2 * color[idx[2]][cc];
        }
      }
    }
  }

  Image8 img;
  img.width = options.width;
  img.height = options.height;
  img.rgb.resize(w * h * 3);
  for (std::size_t p = 0; p < w * h; ++p)
    for (int c = 0; c < kChannels; ++c)
      img.rgb[p * 3 + static_cast<std::size_t>(c)] = tone_map(pixels[p][static_cast<std::size_t>(c)], options.exposure);
  return img;
}

namespace {

StageSummary summarize(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  const auto p90_index = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n))) - 1;
  return {median, values[std::min(p90_index, n - 1)]};
}

std::array<double, 5> stage_array(const StageTimings& t) {
  return {t.irradiance, t.transfer, t.weighting, t.inverse_wavelet, t.raster};
}

}  // namespace

BenchReport bench(Relighter& relighter, int iterations) {
  if (iterations < 1) throw InvalidArgument("bench needs at least one iteration");
  const OpticalMaterial base = relighter.material();
  OpticalMaterial alt = base;
  for (auto& a : alt.sigma_a) a *= 1.25;

  std::array<std::vector<double>, 5> relight_stages, edit_stages;
  std::vector<double> relight_total, edit_total;
  relighter.relight();
  for (int i = 0; i < iterations; ++i) {
    const auto full = relighter.relight().timings;
    const auto edit = relighter.set_material(i % 2 == 0 ? alt : base).timings;
    const auto fa = stage_array(full);
    const auto ea = stage_array(edit);
    for (std::size_t s = 0; s < 5; ++s) {
      relight_stages[s].push_back(fa[s]);
      edit_stages[s].push_back(ea[s]);
    }
    relight_total.push_back(full.total());
    edit_total.push_back(edit.total());
  }
  relighter.set_material(base);

  BenchReport report;
  report.iterations = iterations;
  for (std::size_t s = 0; s < 5; ++s) {
    report.relight_stages[s] = summarize(relight_stages[s]);
    report.edit_stages[s] = summarize(edit_stages[s]);
  }
  report.relight_total = summarize(relight_total);
  report.edit_total = summarize(edit_total);
  return report;
}

}  // namespace tprt
