// SPDX-License-Identifier: Apache-2.0

#include "scene_json.hpp"

#include <charconv>
#include <sstream>

namespace tprt::app {
namespace {

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto* b = item.data();
    const auto* e = item.data() + item.size();
    if (!item.empty() && item[0] == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw InvalidArgument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

Vec3 vec3_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument(std::string(what) + " must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw InvalidArgument(std::string(what) + " must hold numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Rgb rgb_from(const Json& j, const char* what) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v, v};
  }
  const Vec3 v = vec3_from(j, what);
  return {v.x(), v.y(), v.z()};
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json rgb_json(const Rgb& v) { return Json::array({v[0], v[1], v[2]}); }

void apply_channels(Rgb& target, const Json& value, const std::string& channel, const char* what) {
  if (channel == "rgb") {
    target = rgb_from(value, what);
    return;
  }
  int c = -1;
  if (channel == "r") c = 0;
  if (channel == "g") c = 1;
  if (channel == "b") c = 2;
  if (c < 0) throw InvalidArgument("channel must be one of rgb, r, g, b");
  double v = 0.0;
  if (value.is_number()) {
    v = value.get<double>();
  } else if (value.is_array() && value.size() == 1 && value[0].is_number()) {
    v = value[0].get<double>();
  } else if (value.is_array() && value.size() == 3 && value[static_cast<std::size_t>(c)].is_number()) {
    v = value[static_cast<std::size_t>(c)].get<double>();
  } else {
    throw InvalidArgument(std::string(what) + " for a single channel must be a number");
  }
  target[static_cast<std::size_t>(c)] = v;
}

double number(const Json& j, const char* key) {
  if (!j.at(key).is_number()) throw InvalidArgument(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

}  // namespace

const std::vector<Preset>& material_presets() {
  static const std::vector<Preset> presets = [] {
    std::vector<Preset> p;
    auto make = [](Rgb sp, Rgb sa, double eta) {
      OpticalMaterial m;
      m.sigma_s_prime = sp;
      m.sigma_a = sa;
      m.eta = eta;
      return m;
    };
    p.push_back({"marble", make({2.19, 2.62, 3.00}, {0.0021, 0.0041, 0.0071}, 1.3)});
    p.push_back({"skin", make({0.74, 0.88, 1.01}, {0.032, 0.17, 0.48}, 1.3)});
    p.push_back({"milk", make({2.55, 3.21, 3.77}, {0.0011, 0.0024, 0.014}, 1.3)});
    p.push_back({"wax", make({1.20, 1.10, 0.95}, {0.003, 0.008, 0.030}, 1.3)});
    return p;
  }();
  return presets;
}

OpticalMaterial preset_material(const std::string& name) {
  for (const auto& p : material_presets())
    if (p.name == name) return p.material;
  throw InvalidArgument("unknown material preset '" + name + "'");
}

Json to_json(const OpticalMaterial& m) {
  return {{"sigma_s_prime", rgb_json(m.sigma_s_prime)}, {"sigma_a", rgb_json(m.sigma_a)}, {"g", m.g}, {"eta", m.eta}};
}

Json to_json(const Camera& c) {
  return {{"position", vec_json(c.position)}, {"target", vec_json(c.target)}, {"up", vec_json(c.up)},
          {"fov", c.fov_degrees}};
}

Json to_json(const Light& light) {
  return std::visit(
      [](const auto& l) -> Json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointLight>) {
          return {{"type", "point"}, {"position", vec_json(l.position)}, {"intensity", rgb_json(l.intensity)}};
        } else if constexpr (std::is_same_v<T, DirectionalLight>) {
          return {{"type", "directional"}, {"direction", vec_json(l.direction)}, {"irradiance", rgb_json(l.irradiance)}};
        } else if constexpr (std::is_same_v<T, LocalSphereLight>) {
          return {{"type", "sphere"}, {"center", vec_json(l.center)}, {"radius", l.radius}, {"radiance", rgb_json(l.radiance)}};
        } else {
          return {{"type", "ambient"}, {"face_side", l.environment.side}};
        }
      },
      light);
}

Json to_json(const LightRig& rig) {
  Json arr = Json::array();
  for (const auto& l : rig.lights) arr.push_back(to_json(l));
  return arr;
}

OpticalMaterial material_from_json(const Json& j, const OpticalMaterial& base) {
  if (!j.is_object()) throw InvalidArgument("material must be an object");
  OpticalMaterial m = base;
  if (j.contains("preset")) m = preset_material(j.at("preset").get<std::string>());
  const std::string channel = j.value("channel", std::string("rgb"));
  if (j.contains("sigma_s_prime")) apply_channels(m.sigma_s_prime, j.at("sigma_s_prime"), channel, "sigma_s_prime");
  if (j.contains("sigma_a")) apply_channels(m.sigma_a, j.at("sigma_a"), channel, "sigma_a");
  if (j.contains("g")) m.g = number(j, "g");
  if (j.contains("eta")) m.eta = number(j, "eta");
  m.validate();
  return m;
}

Camera camera_from_json(const Json& j, const Camera& base) {
  if (!j.is_object()) throw InvalidArgument("camera must be an object");
  Camera c = base;
  if (j.contains("position")) c.position = vec3_from(j.at("position"), "camera position");
  if (j.contains("target")) c.target = vec3_from(j.at("target"), "camera target");
  if (j.contains("up")) c.up = vec3_from(j.at("up"), "camera up");
  if (j.contains("fov")) c.fov_degrees = number(j, "fov");
  c.validate();
  return c;
}

Light light_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("type")) throw InvalidArgument("light must be an object with a type");
  const auto type = j.at("type").get<std::string>();
  if (type == "point") {
    return PointLight{vec3_from(j.at("position"), "light position"), rgb_from(j.at("intensity"), "light intensity")};
  }
  if (type == "directional") {
    Vec3 d = vec3_from(j.at("direction"), "light direction");
    if (d.norm() <= 0.0) throw InvalidArgument("light direction must be non-zero");
    return DirectionalLight{d.normalized(), rgb_from(j.at("irradiance"), "light irradiance")};
  }
  if (type == "sphere") {
    return LocalSphereLight{vec3_from(j.at("center"), "light center"), number(j, "radius"),
                            rgb_from(j.at("radiance"), "light radiance")};
  }
  if (type == "ambient") {
    AmbientLight a;
    if (j.contains("path")) {
      std::filesystem::path p = j.at("path").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      a.environment = load_cubemap(p);
    } else {
      const int side = j.value("face_side", 16);
      a.environment = Cubemap(side, rgb_from(j.value("radiance", Json(1.0)), "ambient radiance"));
    }
    return a;
  }
  throw InvalidArgument("unknown light type '" + type + "'");
}

LightRig lights_from_json(const Json& array, const std::filesystem::path& base_dir) {
  if (!array.is_array()) throw InvalidArgument("lights must be an array");
  LightRig rig;
  for (const auto& j : array) rig.lights.push_back(light_from_json(j, base_dir));
  rig.validate();
  return rig;
}

Vec3 parse_vec3(const std::string& text) {
  const auto v = split_numbers(text);
  if (v.size() != 3) throw InvalidArgument("expected X,Y,Z: '" + text + "'");
  return {v[0], v[1], v[2]};
}

Rgb parse_rgb(const std::string& text) {
  const auto v = split_numbers(text);
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() != 3) throw InvalidArgument("expected one value or R,G,B: '" + text + "'");
  return {v[0], v[1], v[2]};
}

Json light_spec_to_json(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw InvalidArgument("empty light spec");
  const auto& kind = parts[0];
  if (kind == "point" && parts.size() == 3)
    return {{"type", "point"}, {"position", vec_json(parse_vec3(parts[1]))}, {"intensity", rgb_json(parse_rgb(parts[2]))}};
  if (kind == "dir" && parts.size() == 3)
    return {{"type", "directional"}, {"direction", vec_json(parse_vec3(parts[1]))}, {"irradiance", rgb_json(parse_rgb(parts[2]))}};
  if (kind == "sphere" && parts.size() == 4) {
    const auto radius = split_numbers(parts[2]);
    if (radius.size() != 1) throw InvalidArgument("sphere light radius must be one number: '" + spec + "'");
    return {{"type", "sphere"}, {"center", vec_json(parse_vec3(parts[1]))}, {"radius", radius[0]},
            {"radiance", rgb_json(parse_rgb(parts[3]))}};
  }
  // Paths may contain ':'; keep everything after the kind.
  if (kind == "env" && parts.size() >= 2) return {{"type", "ambient"}, {"path", spec.substr(4)}};
  if (kind == "env-const" && parts.size() == 2) return {{"type", "ambient"}, {"radiance", rgb_json(parse_rgb(parts[1]))}};
  throw InvalidArgument("cannot parse light spec '" + spec + "'");
}

Light parse_light_spec(const std::string& spec) { return light_from_json(light_spec_to_json(spec)); }

}  // namespace tprt::app
