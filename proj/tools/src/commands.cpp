// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include "scene_json.hpp"
#include "service.hpp"

#include "tprt/oracle.hpp"
#include "tprt/parallel.hpp"
#include "tprt/wavelets.hpp"

#include <boost/program_options.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace tprt::app {

namespace po = boost::program_options;

namespace {

constexpr const char* kVersion = "0.1.0";

Json& at_pointer(Json& j, const std::string& pointer) { return j[Json::json_pointer(pointer)]; }

const Json& section(const Json& config, const char* name) {
  static const Json empty = Json::object();
  return config.contains(name) ? config.at(name) : empty;
}

template <typename T>
T get(const Json& config, const std::string& pointer) {
  const Json::json_pointer p(pointer);
  if (!config.contains(p)) throw InvalidArgument("missing configuration key " + pointer);
  try {
    return config.at(p).get<T>();
  } catch (const Json::exception&) {
    throw InvalidArgument("configuration key " + pointer + " has the wrong type");
  }
}

std::filesystem::path path_of(const Json& config, const std::string& pointer) {
  return std::filesystem::path(get<std::string>(config, pointer));
}

void require_path(const Json& config, const std::string& pointer, const char* what) {
  if (get<std::string>(config, pointer).empty()) throw InvalidArgument(std::string("missing ") + what);
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidArgument("expected a comma-separated integer list: '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty integer list");
  return out;
}

// ---------------------------------------------------------------------------
// Flag tables. Every flag writes one configuration key, so a config file and
// the command line describe the same RunConfig.

enum class Kind { String, Path, Int, Double, Switch, Vec3, Rgb, IntList, LightList, Preset };

struct Flag {
  const char* name;
  const char* pointer;
  Kind kind;
  const char* help;
};

const std::vector<Flag> kMeshFlags = {
    {"mesh", "/mesh", Kind::Path, "triangle mesh (OBJ)"},
};

const std::vector<Flag> kBasisFlags = {
    {"k", "/basis/k", Kind::Int, "number of bases kept"},
    {"k-list", "/basis/k_list", Kind::IntList, "comma-separated K values for the error report"},
    {"sigma-s-count", "/basis/sigma_s_prime_count", Kind::Int, "grid nodes along sigma_s'"},
    {"sigma-a-count", "/basis/sigma_a_count", Kind::Int, "grid nodes along sigma_a"},
    {"r-count", "/basis/r_count", Kind::Int, "radial nodes"},
    {"basis-eta", "/basis/eta", Kind::Double, "relative index used for the basis fit"},
};

const std::vector<Flag> kPrecomputeFlags = {
    {"basis", "/basis_file", Kind::Path, "precomputed basis file (default: fit one)"},
    {"parts", "/precompute/parts", Kind::Int, "atlas parts m"},
    {"level", "/precompute/level", Kind::Int, "atlas level n, 0 picks the smallest that fits"},
    {"step1", "/precompute/step1_percent", Kind::Double, "percent of w0 coefficients kept per transfer row"},
    {"step1-all", "/precompute/step1_all", Kind::Switch, "keep every step-1 coefficient"},
    {"step2", "/precompute/step2_fraction", Kind::Double, "energy fraction kept per step-2 column"},
    {"visibility", "/precompute/visibility_face_side", Kind::Int, "cubemap face side for ambient visibility, 0 disables"},
    {"fold-fraction", "/precompute/fold_fraction", Kind::Double, "energy fraction kept in the folded ambient operator"},
    {"fold-eta", "/precompute/eta", Kind::Double, "relative index baked into the folded ambient operator"},
    {"spill-dir", "/precompute/spill_dir", Kind::Path, "directory for step-1 spill files"},
};

const std::vector<Flag> kSceneFlags = {
    {"container", "/container", Kind::Path, "precomputed container (.prts)"},
    {"preset", "/material", Kind::Preset, "material preset (marble, skin, milk, wax)"},
    {"sigma-s", "/material/sigma_s_prime", Kind::Rgb, "reduced scattering, mm^-1 (one value or R,G,B)"},
    {"sigma-a", "/material/sigma_a", Kind::Rgb, "absorption, mm^-1 (one value or R,G,B)"},
    {"g", "/material/g", Kind::Double, "mean cosine of the phase function"},
    {"eta", "/material/eta", Kind::Double, "relative index of refraction"},
    {"light", "/lights", Kind::LightList,
     "light spec, repeatable: point:X,Y,Z:I  dir:DX,DY,DZ:E  sphere:X,Y,Z:R:L  env:PATH  env-const:L"},
    {"no-lights", "/lights", Kind::Switch, "render with an empty light rig"},
    {"camera-pos", "/camera/position", Kind::Vec3, "camera position X,Y,Z"},
    {"camera-target", "/camera/target", Kind::Vec3, "camera target X,Y,Z"},
    {"camera-up", "/camera/up", Kind::Vec3, "camera up vector X,Y,Z"},
    {"fov", "/camera/fov", Kind::Double, "vertical field of view, degrees"},
    {"irradiance-percent", "/runtime/irradiance_percent", Kind::Double, "percent of w0 irradiance coefficients kept"},
    {"irradiance-all", "/runtime/irradiance_all", Kind::Switch, "keep every irradiance coefficient"},
    {"env-terms", "/runtime/environment_terms", Kind::Int, "Haar environment coefficients kept"},
    {"sphere-samples", "/runtime/sphere_samples", Kind::Int, "stratified samples per sphere light"},
    {"seed", "/runtime/seed", Kind::Int, "seed for stochastic light sampling"},
};

struct Subcommand {
  const char* name;
  const char* summary;
  std::vector<const std::vector<Flag>*> groups;
  std::vector<Flag> own;
  int (*run)(const Json& config, std::ostream& out, std::ostream& err);
};

// ---------------------------------------------------------------------------

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path() && !std::filesystem::exists(path.parent_path()))
    throw IoError("output directory does not exist: " + path.parent_path().string());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

TriangleMesh load_configured_mesh(const Json& config) {
  require_path(config, "/mesh", "--mesh");
  return load_mesh(path_of(config, "/mesh"));
}

struct LoadedScene {
  std::shared_ptr<const SceneAssets> assets;
  bool lossless = false;
};

LoadedScene load_scene(const Json& config, std::ostream& log) {
  auto mesh = load_configured_mesh(config);
  PrecomputedScene pre;
  if (!get<std::string>(config, "/container").empty()) {
    pre = load_container(path_of(config, "/container"), &mesh);
  } else {
    log << "no container given; precomputing in memory\n";
    pre = precompute_scene(mesh, config, &log);
  }
  LoadedScene s;
  s.lossless = is_lossless(pre.transfer);
  s.assets = SceneAssets::assemble(std::move(mesh), std::move(pre));
  return s;
}

/// Rejects bad material, light, camera and runtime settings before any heavy work.
void check_scene_config(const Json& config, const TriangleMesh& mesh) {
  (void)material_from(config);
  (void)lights_from(config, mesh);
  (void)camera_from(config, mesh);
  (void)runtime_options_from(config);
}

// ---------------------------------------------------------------------------
// basis

int cmd_basis(const Json& config, std::ostream& out, std::ostream& err) {
  const auto grid_cfg = basis_grid_from(config);
  const int k = get<int>(config, "/basis/k");
  const auto k_list = get<std::vector<int>>(config, "/basis/k_list");
  const auto out_path = path_of(config, "/basis/out");
  const auto csv_path = path_of(config, "/basis/csv");
  if (out_path.has_parent_path() && !std::filesystem::exists(out_path.parent_path()))
    throw IoError("output directory does not exist: " + out_path.parent_path().string());
  if (!csv_path.empty() && csv_path.has_parent_path() && !std::filesystem::exists(csv_path.parent_path()))
    throw IoError("output directory does not exist: " + csv_path.parent_path().string());

  const auto start = std::chrono::steady_clock::now();
  const auto grid = build_sample_grid(grid_cfg);
  const auto m = assemble_matrix(grid);
  const int k_max = std::max(k, *std::max_element(k_list.begin(), k_list.end()));
  const auto full = decompose(m, k_max);
  const auto rows = error_report(full, m, k_list);

  std::ostringstream csv;
  csv << "K,l2rel,linfabs,linfrel\n";
  csv << std::scientific << std::setprecision(6);
  for (const auto& r : rows) csv << r.k << ',' << r.l2_rel << ',' << r.linf_abs << ',' << r.linf_rel << '\n';
  if (csv_path.empty()) {
    out << csv.str();
  } else {
    write_text(csv_path, csv.str());
  }
  if (!out_path.empty()) save_basis(out_path, full.truncated(k));
  err << "basis: " << m.values.rows() << " materials x " << m.values.cols() << " radii, r_max " << fmt(grid.r_max())
      << " mm, K=" << k << ", " << fmt(elapsed_s(start), 3) << " s\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// precompute

Json compression_json(const CompressedTransfer& t) {
  const auto st = t.stats();
  return {{"step1_terms", t.step1_terms()}, {"step2_fraction", t.step2_fraction()},
          {"step1_energy", st.step1_energy}, {"step2_energy", st.step2_energy},
          {"step1_nnz", st.step1_nnz},       {"stored_nnz", st.stored_nnz},
          {"step2_ratio", st.step2_ratio()}, {"lossless", is_lossless(t)}};
}

int cmd_precompute(const Json& config, std::ostream& out, std::ostream& err) {
  require_path(config, "/precompute/out", "--out");
  const auto out_path = path_of(config, "/precompute/out");
  if (out_path.has_parent_path() && !std::filesystem::exists(out_path.parent_path()))
    throw IoError("output directory does not exist: " + out_path.parent_path().string());
  (void)precompute_options_from(config);
  const auto mesh = load_configured_mesh(config);
  const auto start = std::chrono::steady_clock::now();
  const auto scene = precompute_scene(mesh, config, &err);
  save_container(out_path, scene);
  const auto c = compression_json(scene.transfer);
  out << "wrote " << out_path.string() << ": N=" << scene.atlas.sample_count() << " K=" << scene.basis.count()
      << " m=" << scene.atlas.part_count() << " n=" << scene.atlas.level() << " step1_energy="
      << fmt(c["step1_energy"].get<double>()) << " step2_energy=" << fmt(c["step2_energy"].get<double>())
      << " stored_nnz=" << c["stored_nnz"].get<std::uint64_t>() << (is_lossless(scene.transfer) ? " lossless" : "")
      << " in " << fmt(elapsed_s(start), 3) << " s\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// render

int cmd_render(const Json& config, std::ostream& out, std::ostream& err) {
  require_path(config, "/render/out", "--out");
  RasterOptions ro;
  ro.width = get<int>(config, "/render/width");
  ro.height = get<int>(config, "/render/height");
  ro.exposure = get<double>(config, "/render/exposure");
  if (ro.width < 1 || ro.height < 1 || ro.width > 16384 || ro.height > 16384)
    throw InvalidArgument("image size must lie in [1, 16384]");
  if (!(ro.exposure > 0.0) || !std::isfinite(ro.exposure)) throw InvalidArgument("exposure must be positive");
  const auto out_path = path_of(config, "/render/out");
  if (out_path.has_parent_path() && !std::filesystem::exists(out_path.parent_path()))
    throw IoError("output directory does not exist: " + out_path.parent_path().string());

  auto scene = load_scene(config, err);
  auto relighter = make_relighter(scene.assets, config);
  const auto& frame = relighter->frame();
  const auto& a = *scene.assets;
  const auto image = render_image(a.mesh, a.samples, frame.radiance, relighter->camera(), ro);
  write_png(image, out_path);
  const auto& t = frame.timings;
  out << "wrote " << out_path.string() << " (" << ro.width << "x" << ro.height << "), frame " << fmt(t.total(), 3)
      << " ms\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  [[nodiscard]] bool passed() const { return value < bound; }
};

std::vector<Check> wavelet_suite() {
  std::vector<Check> checks;
  double haar_pr = 0.0, cdf_pr = 0.0, parseval = 0.0, identity = 0.0;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int side = 2; side <= 512; side *= 2) {
    const std::size_t n = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    double peak = 0.0, energy = 0.0;
    for (double v : x) {
      peak = std::max(peak, std::abs(v));
      energy += v * v;
    }
    for (Wavelet w : {Wavelet::Haar, Wavelet::Cdf97}) {
      auto c = x;
      forward_inplace(w, c, side);
      if (w == Wavelet::Haar) {
        double ce = 0.0;
        for (double v : c) ce += v * v;
        parseval = std::max(parseval, std::abs(ce - energy) / energy);
        const auto kept = compress_top_n(c, std::max<std::size_t>(1, n / 10));
        auto recon = kept.dense();
        inverse_inplace(w, recon, side);
        double err2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) err2 += (recon[i] - x[i]) * (recon[i] - x[i]);
        identity = std::max(identity, std::abs((kept.total_energy - kept.kept_energy) - err2) / kept.total_energy);
      }
      inverse_inplace(w, c, side);
      double e = 0.0;
      for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(c[i] - x[i]));
      (w == Wavelet::Haar ? haar_pr : cdf_pr) = std::max(w == Wavelet::Haar ? haar_pr : cdf_pr, e / peak);
    }
  }
  checks.push_back({"wavelet.haar_reconstruction", haar_pr, 1e-9});
  checks.push_back({"wavelet.cdf97_reconstruction", cdf_pr, 1e-9});
  checks.push_back({"wavelet.haar_parseval", parseval, 1e-10});
  checks.push_back({"wavelet.truncation_identity", identity, 1e-9});
  return checks;
}

std::vector<Check> pca_suite(const Json& config) {
  const auto grid = build_sample_grid(basis_grid_from(config));
  const auto m = assemble_matrix(grid);
  const auto basis = decompose(m, 15);
  const std::vector<int> ks = {12, 15};
  const auto rows = error_report(basis, m, ks);
  const double ratio = basis.singular_values.size() > 10 ? basis.singular_values[10] / basis.singular_values[0] : 0.0;
  return {{"pca.l2rel_k12", rows[0].l2_rel, 1e-3},
          {"pca.l2rel_k15", rows[1].l2_rel, 1e-4},
          {"pca.singular_value_10_ratio", ratio, 1e-3}};
}

int cmd_validate(const Json& config, std::ostream& out, std::ostream& err) {
  const double rms_bound = get<double>(config, "/validate/rms_bound");
  const double lossless_bound = get<double>(config, "/validate/lossless_bound");
  if (!(rms_bound > 0.0) || !(lossless_bound > 0.0)) throw InvalidArgument("validation bounds must be positive");
  const auto report_path = path_of(config, "/validate/report");
  if (!report_path.empty() && report_path.has_parent_path() && !std::filesystem::exists(report_path.parent_path()))
    throw IoError("output directory does not exist: " + report_path.parent_path().string());
  {
    const auto mesh = load_configured_mesh(config);
    check_scene_config(config, mesh);
    if (lights_from(config, mesh).ambient())
      throw InvalidArgument("validate compares direct lighting only; remove ambient lights");
  }

  const auto start = std::chrono::steady_clock::now();
  auto scene = load_scene(config, err);
  auto relighter = make_relighter(scene.assets, config);
  const auto& a = *scene.assets;
  const auto& frame = relighter->frame();
  const auto material = relighter->material();
  const bool lossless = scene.lossless && relighter->options().irradiance_keep_all;

  // The oracle sees the untruncated irradiance; the pipeline sees its own truncation.
  const auto& e = relighter->direct_irradiance();
  const auto ref_dipole = shade_samples(
      a.samples, oracle_scattered(a.samples, e, material, OracleKernel::Dipole), relighter->camera(), material.eta);
  const auto ref_basis = shade_samples(
      a.samples, oracle_scattered(a.samples, e, material, OracleKernel::Basis, &a.basis), relighter->camera(),
      material.eta);
  const auto vs_dipole = compare(frame.unclamped, ref_dipole);
  const auto vs_basis = compare(frame.unclamped, ref_basis);

  std::vector<Check> checks;
  checks.push_back({"oracle.rms_rel", vs_dipole.rms_rel, rms_bound});
  if (lossless) checks.push_back({"oracle.basis_rms_rel", vs_basis.rms_rel, lossless_bound});
  if (get<bool>(config, "/validate/suites")) {
    for (auto& c : wavelet_suite()) checks.push_back(std::move(c));
    for (auto& c : pca_suite(config)) checks.push_back(std::move(c));
  }

  const auto st = a.transfer.stats();
  out << "scene: N=" << a.samples.size() << " K=" << a.basis.count() << " domain=" << a.atlas.domain_size()
      << (lossless ? " lossless" : "") << "\n";
  out << "compression: step1_energy=" << fmt(st.step1_energy) << " step2_energy=" << fmt(st.step2_energy)
      << " step2_ratio=" << fmt(st.step2_ratio()) << " irradiance_terms=" << frame.stats.irradiance_terms << "\n";
  out << "vs dipole oracle: rms_rel=" << fmt(vs_dipole.rms_rel) << " linf_abs=" << fmt(vs_dipole.linf_abs)
      << " linf_rel=" << fmt(vs_dipole.linf_rel) << "\n";
  out << "vs basis oracle:  rms_rel=" << fmt(vs_basis.rms_rel) << " linf_abs=" << fmt(vs_basis.linf_abs)
      << " linf_rel=" << fmt(vs_basis.linf_rel) << "\n";
  bool ok = true;
  Json jchecks = Json::array();
  for (const auto& c : checks) {
    ok = ok && c.passed();
    out << (c.passed() ? "PASS " : "FAIL ") << c.name << " = " << fmt(c.value) << " (bound " << fmt(c.bound) << ")\n";
    jchecks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"passed", c.passed()}});
  }
  if (!ok) out << "result: DEGRADED\n";
  else out << "result: ok\n";
  err << "validate: " << fmt(elapsed_s(start), 3) << " s\n";

  if (!report_path.empty()) {
    auto metrics = [](const ErrorMetrics& m) {
      return Json{{"rms_rel", m.rms_rel}, {"linf_abs", m.linf_abs}, {"linf_rel", m.linf_rel}};
    };
    const Json report = {{"passed", ok},
                         {"lossless", lossless},
                         {"samples", a.samples.size()},
                         {"K", a.basis.count()},
                         {"compression", compression_json(a.transfer)},
                         {"vs_dipole", metrics(vs_dipole)},
                         {"vs_basis", metrics(vs_basis)},
                         {"checks", jchecks}};
    write_text(report_path, report.dump(2) + "\n");
  }
  return ok ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// serve

int cmd_serve(const Json& config, std::ostream& out, std::ostream& err) {
  ServiceOptions opts;
  opts.bind = get<std::string>(config, "/serve/bind");
  opts.ui_dir = path_of(config, "/serve/ui_dir");
  opts.send_queue_limit = get<std::size_t>(config, "/serve/send_queue");
  if (opts.send_queue_limit < 1) throw InvalidArgument("send queue limit must be at least 1");
  if (!opts.ui_dir.empty() && !std::filesystem::is_directory(opts.ui_dir))
    throw IoError("ui directory does not exist: " + opts.ui_dir.string());
  opts.asset_dir = std::filesystem::current_path();
  std::string host;
  unsigned short port = 0;
  split_bind_address(opts.bind, host, port);

  auto scene = load_scene(config, err);
  Service service(make_relighter(scene.assets, config), opts);
  service.start();
  out << "listening on http://" << host << ":" << service.port() << "/" << std::endl;
  service.run_until_signal();
  err << "shut down\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const Json& config, std::ostream& out, std::ostream& err) {
  const int iterations = get<int>(config, "/bench/iterations");
  if (iterations < 1) throw InvalidArgument("iterations must be at least 1");
  const bool json = get<bool>(config, "/bench/json");
  auto scene = load_scene(config, err);
  auto relighter = make_relighter(scene.assets, config);
  const auto report = bench(*relighter, iterations);

  if (json) {
    auto stages = [](const std::array<StageSummary, 5>& s) {
      Json j = Json::object();
      for (std::size_t i = 0; i < s.size(); ++i) j[kStageNames[i]] = {{"median_ms", s[i].median}, {"p90_ms", s[i].p90}};
      return j;
    };
    const Json j = {{"iterations", report.iterations},
                    {"samples", scene.assets->samples.size()},
                    {"relight", stages(report.relight_stages)},
                    {"edit", stages(report.edit_stages)},
                    {"relight_total", {{"median_ms", report.relight_total.median}, {"p90_ms", report.relight_total.p90}}},
                    {"edit_total", {{"median_ms", report.edit_total.median}, {"p90_ms", report.edit_total.p90}}},
                    {"edit_faster", report.edit_total.median < report.relight_total.median}};
    out << j.dump(2) << "\n";
  } else {
    out << std::left << std::setw(18) << "stage" << std::right << std::setw(14) << "relight med" << std::setw(14)
        << "relight p90" << std::setw(14) << "edit med" << std::setw(14) << "edit p90" << "\n";
    auto row = [&](const std::string& name, const StageSummary& r, const StageSummary& e) {
      out << std::left << std::setw(18) << name << std::right << std::fixed << std::setprecision(4) << std::setw(14)
          << r.median << std::setw(14) << r.p90 << std::setw(14) << e.median << std::setw(14) << e.p90 << "\n";
    };
    for (std::size_t i = 0; i < kStageNames.size(); ++i)
      row(kStageNames[i], report.relight_stages[i], report.edit_stages[i]);
    row("total", report.relight_total, report.edit_total);
    out << std::defaultfloat << "times in ms over " << report.iterations << " iterations\n";
  }
  if (!(report.edit_total.median < report.relight_total.median)) {
    err << "edit path median is not below the full relight median\n";
    return kExitValidation;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

const std::vector<Flag> kBasisOwn = {
    {"out", "/basis/out", Kind::Path, "basis file to write"},
    {"csv", "/basis/csv", Kind::Path, "error report CSV (default: stdout)"},
};
const std::vector<Flag> kPrecomputeOwn = {
    {"out", "/precompute/out", Kind::Path, "container to write"},
    {"k", "/basis/k", Kind::Int, "number of bases when fitting"},
};
const std::vector<Flag> kRenderOwn = {
    {"out", "/render/out", Kind::Path, "PNG to write"},
    {"width", "/render/width", Kind::Int, "image width"},
    {"height", "/render/height", Kind::Int, "image height"},
    {"exposure", "/render/exposure", Kind::Double, "linear exposure scale before the sRGB encode"},
};
const std::vector<Flag> kValidateOwn = {
    {"k", "/basis/k", Kind::Int, "number of bases when fitting"},
    {"rms-bound", "/validate/rms_bound", Kind::Double, "bound on the RMS error against the dipole oracle"},
    {"lossless-bound", "/validate/lossless_bound", Kind::Double, "bound against the basis oracle at lossless settings"},
    {"report", "/validate/report", Kind::Path, "write a JSON report"},
    {"skip-suites", "/validate/suites", Kind::Switch, "skip the wavelet and PCA property suites"},
};
const std::vector<Flag> kServeOwn = {
    {"bind", "/serve/bind", Kind::String, "host:port to listen on"},
    {"ui-dir", "/serve/ui_dir", Kind::Path, "static editor bundle served at /"},
    {"send-queue", "/serve/send_queue", Kind::Int, "queued messages per client before frames are dropped"},
};
const std::vector<Flag> kBenchOwn = {
    {"iterations", "/bench/iterations", Kind::Int, "relight and edit iterations"},
    {"json", "/bench/json", Kind::Switch, "print the report as JSON"},
};

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> list = {
      {"basis", "fit the PCA bases and print their error report", {&kBasisFlags}, kBasisOwn, cmd_basis},
      {"precompute", "build a transfer container for a mesh", {&kMeshFlags, &kBasisFlags, &kPrecomputeFlags},
       kPrecomputeOwn, cmd_precompute},
      {"render", "relight a scene and write a PNG", {&kMeshFlags, &kSceneFlags}, kRenderOwn, cmd_render},
      {"validate", "compare the pipeline with the brute-force oracle",
       {&kMeshFlags, &kBasisFlags, &kPrecomputeFlags, &kSceneFlags}, kValidateOwn, cmd_validate},
      {"serve", "run the HTTP and WebSocket service", {&kMeshFlags, &kSceneFlags}, kServeOwn, cmd_serve},
      {"bench", "time full relights against material edits", {&kMeshFlags, &kSceneFlags}, kBenchOwn, cmd_bench},
  };
  return list;
}

std::vector<Flag> flags_of(const Subcommand& sub) {
  std::vector<Flag> flags;
  auto add = [&](const Flag& f) {
    for (const auto& g : flags)
      if (std::string_view(g.name) == f.name) return;
    flags.push_back(f);
  };
  for (const auto& f : sub.own) add(f);
  for (const auto* group : sub.groups)
    for (const auto& f : *group) add(f);
  return flags;
}

po::options_description describe(const Subcommand& sub, const std::vector<Flag>& flags) {
  po::options_description desc(std::string("tprt ") + sub.name + " options");
  desc.add_options()("help,h", "show this help")("config", po::value<std::string>(), "TOML configuration file")(
      "threads", po::value<int>(), "worker thread cap, 0 uses every core");
  for (const auto& f : flags) {
    switch (f.kind) {
      case Kind::Switch: desc.add_options()(f.name, po::bool_switch(), f.help); break;
      case Kind::Int: desc.add_options()(f.name, po::value<long long>(), f.help); break;
      case Kind::Double: desc.add_options()(f.name, po::value<double>(), f.help); break;
      case Kind::LightList: desc.add_options()(f.name, po::value<std::vector<std::string>>()->composing(), f.help); break;
      default: desc.add_options()(f.name, po::value<std::string>(), f.help); break;
    }
  }
  return desc;
}

void apply_flags(Json& config, const std::vector<Flag>& flags, const po::variables_map& vm) {
  for (const auto& f : flags) {
    if (!vm.count(f.name)) continue;
    const auto& v = vm[f.name];
    switch (f.kind) {
      case Kind::Switch:
        if (!v.as<bool>()) break;
        if (std::string_view(f.name) == "no-lights") at_pointer(config, f.pointer) = Json::array();
        else if (std::string_view(f.name) == "skip-suites") at_pointer(config, f.pointer) = false;
        else at_pointer(config, f.pointer) = true;
        break;
      case Kind::Int: at_pointer(config, f.pointer) = v.as<long long>(); break;
      case Kind::Double: at_pointer(config, f.pointer) = v.as<double>(); break;
      case Kind::Path: at_pointer(config, f.pointer) = std::filesystem::absolute(v.as<std::string>()).string(); break;
      case Kind::String: at_pointer(config, f.pointer) = v.as<std::string>(); break;
      case Kind::Vec3: {
        const Vec3 p = parse_vec3(v.as<std::string>());
        at_pointer(config, f.pointer) = Json::array({p.x(), p.y(), p.z()});
        break;
      }
      case Kind::Rgb: {
        const Rgb c = parse_rgb(v.as<std::string>());
        at_pointer(config, f.pointer) = Json::array({c[0], c[1], c[2]});
        break;
      }
      case Kind::IntList: at_pointer(config, f.pointer) = parse_int_list(v.as<std::string>()); break;
      case Kind::LightList: {
        Json arr = Json::array();
        for (const auto& spec : v.as<std::vector<std::string>>()) {
          Json j = light_spec_to_json(spec);
          if (j.contains("path")) j["path"] = std::filesystem::absolute(j["path"].get<std::string>()).string();
          arr.push_back(std::move(j));
        }
        at_pointer(config, f.pointer) = std::move(arr);
        break;
      }
      case Kind::Preset: {
        (void)preset_material(v.as<std::string>());
        at_pointer(config, f.pointer) = Json{{"preset", v.as<std::string>()}};
        break;
      }
    }
  }
}

void print_usage(std::ostream& out) {
  out << "usage: tprt <command> [options]\n\ncommands:\n";
  for (const auto& s : subcommands()) out << "  " << std::left << std::setw(12) << s.name << s.summary << "\n";
  out << "\nRun 'tprt <command> --help' for the options of one command.\n";
}

}  // namespace

// ---------------------------------------------------------------------------

Json default_config() {
  return {
      {"mesh", ""},
      {"container", ""},
      {"basis_file", ""},
      {"threads", 0},
      {"basis",
       {{"k", 12},
        {"k_list", {1, 2, 4, 6, 8, 10, 12, 15}},
        {"sigma_s_prime_count", 32},
        {"sigma_a_count", 32},
        {"r_count", 512},
        {"eta", 1.3},
        {"out", ""},
        {"csv", ""}}},
      {"precompute",
       {{"parts", 4},
        {"level", 0},
        {"step1_percent", 1.0},
        {"step1_all", false},
        {"step2_fraction", 0.95},
        {"visibility_face_side", 0},
        {"fold_fraction", 0.9999},
        {"eta", 1.3},
        {"spill_dir", ""},
        {"out", ""}}},
      {"runtime",
       {{"irradiance_percent", 4.0},
        {"irradiance_all", false},
        {"environment_terms", 128},
        {"sphere_samples", 64},
        {"seed", 0x5eed}}},
      {"material", {{"preset", "marble"}}},
      {"camera", Json::object()},
      {"lights", nullptr},
      {"render", {{"width", 512}, {"height", 512}, {"exposure", 1.0}, {"out", ""}}},
      {"validate", {{"rms_bound", 0.02}, {"lossless_bound", 1e-6}, {"report", ""}, {"suites", true}}},
      {"serve", {{"bind", "127.0.0.1:7878"}, {"ui_dir", ""}, {"send_queue", 8}}},
      {"bench", {{"iterations", 50}, {"json", false}}},
  };
}

void resolve_config_paths(Json& config, const std::filesystem::path& base) {
  auto fix = [&](const std::string& pointer) {
    const Json::json_pointer p(pointer);
    if (!config.contains(p) || !config.at(p).is_string()) return;
    const std::filesystem::path v = config.at(p).get<std::string>();
    if (!v.empty() && v.is_relative()) config.at(p) = (base / v).lexically_normal().string();
  };
  for (const char* p : {"/mesh", "/container", "/basis_file", "/basis/out", "/basis/csv", "/precompute/out",
                        "/precompute/spill_dir", "/render/out", "/validate/report", "/serve/ui_dir"})
    fix(p);
  if (config.contains("lights") && config.at("lights").is_array()) {
    for (auto& l : config.at("lights"))
      if (l.is_object() && l.contains("path") && l.at("path").is_string()) {
        const std::filesystem::path v = l.at("path").get<std::string>();
        if (v.is_relative()) l["path"] = (base / v).lexically_normal().string();
      }
  }
}

BasisGridConfig basis_grid_from(const Json& config) {
  BasisGridConfig g;
  g.sigma_s_prime_count = get<int>(config, "/basis/sigma_s_prime_count");
  g.sigma_a_count = get<int>(config, "/basis/sigma_a_count");
  g.r_count = get<int>(config, "/basis/r_count");
  g.eta = get<double>(config, "/basis/eta");
  if (g.sigma_s_prime_count < 1 || g.sigma_a_count < 1 || g.r_count < 2)
    throw InvalidArgument("basis grid needs at least one material node and two radial nodes");
  if (!(g.eta > 0.0)) throw InvalidArgument("basis eta must be positive");
  const int k = get<int>(config, "/basis/k");
  if (k < 1) throw InvalidArgument("K must be at least 1");
  for (int v : get<std::vector<int>>(config, "/basis/k_list"))
    if (v < 1) throw InvalidArgument("K list entries must be at least 1");
  return g;
}

PrecomputeOptions precompute_options_from(const Json& config) {
  PrecomputeOptions o;
  const double pct = get<double>(config, "/precompute/step1_percent");
  o.step1_keep_all = get<bool>(config, "/precompute/step1_all");
  o.step2_fraction = get<double>(config, "/precompute/step2_fraction");
  o.spill_dir = path_of(config, "/precompute/spill_dir");
  if (!(pct > 0.0 && pct <= 100.0)) throw InvalidArgument("step-1 percent must lie in (0, 100]");
  if (!(o.step2_fraction > 0.0 && o.step2_fraction <= 1.0)) throw InvalidArgument("step-2 fraction must lie in (0, 1]");
  o.step1_fraction = pct / 100.0;
  const int parts = get<int>(config, "/precompute/parts");
  const int level = get<int>(config, "/precompute/level");
  const int face = get<int>(config, "/precompute/visibility_face_side");
  const double fold = get<double>(config, "/precompute/fold_fraction");
  if (parts < 1) throw InvalidArgument("parts must be at least 1");
  if (level < 0 || level > 15) throw InvalidArgument("level must lie in [0, 15]");
  if (face < 0 || (face > 0 && !is_power_of_two(static_cast<std::uint64_t>(face))))
    throw InvalidArgument("visibility face side must be 0 or a power of two");
  if (!(fold > 0.0 && fold <= 1.0)) throw InvalidArgument("fold fraction must lie in (0, 1]");
  if (!o.spill_dir.empty() && !std::filesystem::is_directory(o.spill_dir))
    throw IoError("spill directory does not exist: " + o.spill_dir.string());
  return o;
}

RuntimeOptions runtime_options_from(const Json& config) {
  RuntimeOptions o;
  const double pct = get<double>(config, "/runtime/irradiance_percent");
  if (!(pct > 0.0 && pct <= 100.0)) throw InvalidArgument("irradiance percent must lie in (0, 100]");
  o.irradiance_fraction = pct / 100.0;
  o.irradiance_keep_all = get<bool>(config, "/runtime/irradiance_all");
  const auto terms = get<long long>(config, "/runtime/environment_terms");
  const auto samples = get<long long>(config, "/runtime/sphere_samples");
  if (terms < 1) throw InvalidArgument("environment terms must be at least 1");
  if (samples < 1) throw InvalidArgument("sphere samples must be at least 1");
  o.environment_terms = static_cast<std::size_t>(terms);
  o.irradiance.sphere_samples = static_cast<int>(samples);
  o.irradiance.seed = get<std::uint64_t>(config, "/runtime/seed");
  return o;
}

OpticalMaterial material_from(const Json& config) { return material_from_json(section(config, "material"), {}); }

Camera camera_from(const Json& config, const TriangleMesh& mesh) {
  const auto [lo, hi] = mesh.bounds();
  const Vec3 center = 0.5 * (lo + hi);
  const double radius = std::max(0.5 * (hi - lo).norm(), 1e-6);
  Camera c;
  c.target = center;
  c.position = center + Vec3(0.0, 0.0, 1.15 * radius / std::sin(0.5 * c.fov_degrees * kPi / 180.0));
  return camera_from_json(section(config, "camera"), c);
}

LightRig lights_from(const Json& config, const TriangleMesh& mesh) {
  const Json& lights = section(config, "lights");
  if (lights.is_array()) return lights_from_json(lights);
  if (!lights.is_null()) throw InvalidArgument("lights must be an array");
  const auto [lo, hi] = mesh.bounds();
  const Vec3 center = 0.5 * (lo + hi);
  const double radius = std::max(0.5 * (hi - lo).norm(), 1e-6);
  const Vec3 offset = radius * Vec3(2.5, 2.0, 3.0);
  const double d2 = offset.squaredNorm();
  LightRig rig;
  rig.lights.push_back(PointLight{center + offset, {d2, d2, d2}});
  return rig;
}

bool is_lossless(const CompressedTransfer& transfer) {
  return transfer.step1_terms() >= transfer.domain_size() && transfer.step2_fraction() >= 1.0;
}

PrecomputedScene precompute_scene(const TriangleMesh& mesh, const Json& config, std::ostream* log) {
  auto opts = precompute_options_from(config);
  const int k = get<int>(config, "/basis/k");
  const auto basis_file = path_of(config, "/basis_file");
  const auto start = std::chrono::steady_clock::now();

  PrecomputedScene scene;
  scene.mesh_hash = mesh.hash();
  if (!basis_file.empty()) {
    auto basis = load_basis(basis_file);
    if (k > basis.count())
      throw InvalidArgument("basis file holds " + std::to_string(basis.count()) + " bases, K=" + std::to_string(k) +
                            " requested");
    scene.basis = basis.truncated(k);
  } else {
    const auto m = assemble_matrix(build_sample_grid(basis_grid_from(config)));
    scene.basis = decompose(m, k);
  }
  if (log) *log << "basis K=" << scene.basis.count() << " (" << fmt(elapsed_s(start), 3) << " s)\n";

  const auto samples = sample_surface(mesh);
  const int parts = get<int>(config, "/precompute/parts");
  int level = get<int>(config, "/precompute/level");
  if (level == 0) level = default_level(samples.size(), parts);
  scene.atlas = build_quadtree_atlas(samples.positions, parts, level);
  if (log) {
    *log << "atlas: N=" << samples.size() << " parts=" << scene.atlas.part_count() << " level=" << level
         << " domain=" << scene.atlas.domain_size() << "\n";
    opts.on_progress = [log, last = -1](std::string_view stage, double p) mutable {
      const int pct = static_cast<int>(p * 100.0);
      if (pct / 10 != last / 10 || p >= 1.0) {
        *log << "  " << stage << " " << pct << "%\n";
        last = pct;
      }
    };
  }
  scene.transfer = precompute_transfer(samples, scene.atlas, scene.basis, opts);
  if (log) *log << "transfer done (" << fmt(elapsed_s(start), 3) << " s)\n";

  const int face = get<int>(config, "/precompute/visibility_face_side");
  if (face > 0) {
    const auto accel = build_accelerator(mesh);
    const auto vis = precompute_visibility(samples, accel, face);
    scene.ambient = fold_visibility(scene.transfer, vis, samples, scene.atlas, get<double>(config, "/precompute/eta"),
                                    get<double>(config, "/precompute/fold_fraction"));
    if (log) *log << "ambient visibility folded (" << fmt(elapsed_s(start), 3) << " s)\n";
  }

  Json settings = {{"basis", config.at("basis")}, {"precompute", config.at("precompute")}, {"mesh", config.at("mesh")},
                   {"basis_file", config.at("basis_file")}};
  settings["basis"].erase("out");
  settings["basis"].erase("csv");
  settings["precompute"].erase("out");
  settings["precompute"].erase("spill_dir");
  const Json meta = {{"generator", std::string("tprt ") + kVersion},
                     {"mesh_hash", to_hex(scene.mesh_hash)},
                     {"samples", samples.size()},
                     {"lossless", is_lossless(scene.transfer)},
                     {"compression", compression_json(scene.transfer)},
                     {"config", settings}};
  scene.meta_json = meta.dump();
  return scene;
}

std::unique_ptr<Relighter> make_relighter(std::shared_ptr<const SceneAssets> assets, const Json& config) {
  const auto& mesh = assets->mesh;
  auto material = material_from(config);
  auto lights = lights_from(config, mesh);
  auto camera = camera_from(config, mesh);
  auto options = runtime_options_from(config);
  return std::make_unique<Relighter>(std::move(assets), material, std::move(lights), camera, options);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    print_usage(args.empty() ? err : out);
    return args.empty() ? kExitUsage : kExitOk;
  }
  if (args[0] == "--version") {
    out << "tprt " << kVersion << "\n";
    return kExitOk;
  }
  const Subcommand* sub = nullptr;
  for (const auto& s : subcommands())
    if (args[0] == s.name) sub = &s;
  if (sub == nullptr) {
    err << "tprt: unknown command '" << args[0] << "'\n";
    print_usage(err);
    return kExitUsage;
  }

  try {
    const auto flags = flags_of(*sub);
    const auto desc = describe(*sub, flags);
    po::variables_map vm;
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    po::store(po::command_line_parser(rest).options(desc).run(), vm);
    po::notify(vm);
    if (vm.count("help")) {
      out << desc << "\n";
      return kExitOk;
    }

    Json config = default_config();
    if (vm.count("config")) {
      const std::filesystem::path path = vm["config"].as<std::string>();
      Json file = load_toml(path);
      resolve_config_paths(file, std::filesystem::absolute(path).parent_path());
      merge_into(config, file);
    }
    apply_flags(config, flags, vm);
    if (vm.count("threads")) config["threads"] = vm["threads"].as<int>();
    const int threads = get<int>(config, "/threads");
    if (threads < 0) throw InvalidArgument("threads must be non-negative");
    set_thread_count(threads);
    return sub->run(config, out, err);
  } catch (const po::error& e) {
    err << "tprt " << sub->name << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "tprt " << sub->name << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const HashMismatch& e) {
    err << "tprt " << sub->name << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "tprt " << sub->name << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const Json::exception& e) {
    err << "tprt " << sub->name << ": bad configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "tprt " << sub->name << ": " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace tprt::app
