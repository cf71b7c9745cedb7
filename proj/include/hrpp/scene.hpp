// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrpp/error.hpp"
#include "hrpp/geom.hpp"
#include "hrpp/log.hpp"

namespace hrpp {

struct Camera {
  Vec3 position{0.f, 0.f, 5.f};
  Vec3 look_at{0.f, 0.f, 0.f};
  Vec3 up{0.f, 1.f, 0.f};
  float vertical_fov = 40.f;  // degrees
  std::uint32_t width = 256;
  std::uint32_t height = 256;
};

struct PointLight {
  Vec3 position;
  Vec3 intensity{1.f, 1.f, 1.f};  // RGB
};

struct Material {
  Vec3 albedo{0.8f, 0.8f, 0.8f};
  bool reflective = false;
};

/// Row-major 4x4 affine transform.
struct Transform {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  static Transform translate(Vec3 t) {
    Transform r;
    r.m[3] = t.x;
    r.m[7] = t.y;
    r.m[11] = t.z;
    return r;
  }
  static Transform scale(Vec3 s) {
    Transform r;
    r.m[0] = s.x;
    r.m[5] = s.y;
    r.m[10] = s.z;
    return r;
  }
  static Transform rotate_y(double degrees) {
    const double a = degrees * std::numbers::pi / 180.0;
    Transform r;
    r.m[0] = std::cos(a);
    r.m[2] = std::sin(a);
    r.m[8] = -std::sin(a);
    r.m[10] = std::cos(a);
    return r;
  }
  friend Transform operator*(const Transform& a, const Transform& b) {
    Transform r;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0;
        for (int k = 0; k < 4; ++k) s += a.m[4 * i + k] * b.m[4 * k + j];
        r.m[4 * i + j] = s;
      }
    return r;
  }
  Vec3 apply(Vec3 p) const {
    const double x = p.x, y = p.y, z = p.z;
    return {static_cast<float>(m[0] * x + m[1] * y + m[2] * z + m[3]),
            static_cast<float>(m[4] * x + m[5] * y + m[6] * z + m[7]),
            static_cast<float>(m[8] * x + m[9] * y + m[10] * z + m[11])};
  }
  double linear_determinant() const {
    return m[0] * (m[5] * m[10] - m[6] * m[9]) - m[1] * (m[4] * m[10] - m[6] * m[8]) +
           m[2] * (m[4] * m[9] - m[5] * m[8]);
  }
  bool is_affine() const { return m[12] == 0 && m[13] == 0 && m[14] == 0 && m[15] == 1; }
  bool invertible() const { return is_affine() && std::abs(linear_determinant()) > 1e-12; }
};

inline std::vector<Triangle> transformed(std::vector<Triangle> tris, const Transform& xf) {
  for (Triangle& t : tris) {
    t.v0 = xf.apply(t.v0);
    t.v1 = xf.apply(t.v1);
    t.v2 = xf.apply(t.v2);
  }
  return tris;
}

// ---------------------------------------------------------------------------
// Wavefront OBJ subset: `v` and `f` records only.

namespace detail {

inline float parse_float(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    const float v = std::stof(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
}

inline long parse_index(const std::string& tok, std::size_t line) {
  const std::string head = tok.substr(0, tok.find('/'));
  try {
    std::size_t used = 0;
    const long v = std::stol(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": bad face index '" + tok + "'");
  }
}

}  // namespace detail

/// Parses OBJ text. Polygons are fan-triangulated; 1-based and negative
/// (relative) indices are accepted. Triangle ids are assigned in file order.
inline std::vector<Triangle> parse_obj(std::istream& in, const std::string& name = "<obj>") {
  struct Face {
    std::vector<long> idx;  // 0-based once resolved, -1 = pending positive index
    std::size_t line;
  };
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  std::map<std::string, std::size_t> skipped;

  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
    std::istringstream ls(text);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "v") {
      std::array<std::string, 3> tok;
      if (!(ls >> tok[0] >> tok[1] >> tok[2]))
        throw Error(ErrorKind::ParseError, name + " line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      verts.push_back({detail::parse_float(tok[0], line_no), detail::parse_float(tok[1], line_no),
                       detail::parse_float(tok[2], line_no)});
    } else if (kw == "f") {
      Face f{{}, line_no};
      std::string tok;
      while (ls >> tok) {
        const long i = detail::parse_index(tok, line_no);
        if (i == 0)
          throw Error(ErrorKind::IndexOutOfRange, name + " line " + std::to_string(line_no) + ": OBJ indices are 1-based");
        if (i < 0) {
          const long abs = static_cast<long>(verts.size()) + i;
          if (abs < 0)
            throw Error(ErrorKind::IndexOutOfRange,
                        name + " line " + std::to_string(line_no) + ": relative index " + tok + " before first vertex");
          f.idx.push_back(abs);
        } else {
          f.idx.push_back(i - 1);
        }
      }
      if (f.idx.size() < 3)
        throw Error(ErrorKind::ParseError, name + " line " + std::to_string(line_no) + ": face needs >= 3 vertices");
      faces.push_back(std::move(f));
    } else {
      ++skipped[kw];
    }
  }
  for (const auto& [kw, n] : skipped)
    log_warning(name + ": skipped " + std::to_string(n) + " unsupported '" + kw + "' record(s)");

  std::vector<Triangle> tris;
  for (const Face& f : faces) {
    for (long i : f.idx)
      if (i >= static_cast<long>(verts.size()))
        throw Error(ErrorKind::IndexOutOfRange,
                    name + " line " + std::to_string(f.line) + ": vertex index " + std::to_string(i + 1) +
                        " exceeds vertex count " + std::to_string(verts.size()));
    for (std::size_t k = 1; k + 1 < f.idx.size(); ++k) {
      Triangle t{verts[f.idx[0]], verts[f.idx[k]], verts[f.idx[k + 1]], static_cast<PrimIndex>(tris.size())};
      tris.push_back(t);
    }
  }
  return tris;
}

inline std::vector<Triangle> load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open OBJ file " + path.string());
  return parse_obj(in, path.string());
}

/// Writes triangles as an unshared-vertex OBJ. Floats are written with 9
/// significant digits so reloading is bit-exact.
inline void write_obj(std::ostream& os, const std::vector<Triangle>& tris) {
  char buf[128];
  for (const Triangle& t : tris)
    for (const Vec3& v : {t.v0, t.v1, t.v2}) {
      std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
      os << buf;
    }
  for (std::size_t i = 0; i < tris.size(); ++i)
    os << "f " << 3 * i + 1 << ' ' << 3 * i + 2 << ' ' << 3 * i + 3 << '\n';
}

// ---------------------------------------------------------------------------
// Procedural generators.

namespace detail {

inline void push_tri(std::vector<Triangle>& out, Vec3 a, Vec3 b, Vec3 c) {
  out.push_back({a, b, c, static_cast<PrimIndex>(out.size())});
}

inline void push_quad(std::vector<Triangle>& out, Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
  push_tri(out, a, b, c);
  push_tri(out, a, c, d);
}

inline void push_cube(std::vector<Triangle>& out, Vec3 lo, Vec3 hi) {
  const Vec3 p[8] = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                     {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
  push_quad(out, p[0], p[3], p[2], p[1]);  // -z
  push_quad(out, p[4], p[5], p[6], p[7]);  // +z
  push_quad(out, p[0], p[4], p[7], p[3]);  // -x
  push_quad(out, p[1], p[2], p[6], p[5]);  // +x
  push_quad(out, p[0], p[1], p[5], p[4]);  // -y
  push_quad(out, p[3], p[7], p[6], p[2]);  // +y
}

inline void menger(std::vector<Triangle>& out, Vec3 lo, float size, int level) {
  if (level == 0) {
    push_cube(out, lo, lo + Vec3{size, size, size});
    return;
  }
  const float s = size / 3.f;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        if ((i == 1) + (j == 1) + (k == 1) >= 2) continue;
        menger(out, lo + Vec3{i * s, j * s, k * s}, s, level - 1);
      }
}

inline void uv_sphere(std::vector<Triangle>& out, Vec3 center, float radius, int s) {
  auto at = [&](int stack, int slice) {
    const double theta = std::numbers::pi * stack / s;
    const double phi = 2.0 * std::numbers::pi * (slice % s) / s;
    return center + Vec3{static_cast<float>(radius * std::sin(theta) * std::cos(phi)),
                         static_cast<float>(radius * std::cos(theta)),
                         static_cast<float>(radius * std::sin(theta) * std::sin(phi))};
  };
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      if (i == 0) {
        push_tri(out, at(0, j), at(1, j + 1), at(1, j));
      } else if (i == s - 1) {
        push_tri(out, at(i, j), at(i, j + 1), at(s, j));
      } else {
        push_quad(out, at(i, j), at(i, j + 1), at(i + 1, j + 1), at(i + 1, j));
      }
    }
}

template <typename T>
T param(const nlohmann::json& params, const char* key, T fallback) {
  if (!params.is_object() || !params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("generator parameter '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Deterministic test geometry.
///   grid    {n=8, size=2}: n x n quads in the y=0 plane, 2 n^2 triangles.
///   spheres {count=4, tessellation=16, radius=0.4, spacing=1}: count x count
///           UV spheres on the y=0 plane, 2 s (s-1) triangles each.
///   menger  {level=2, size=1}: Menger sponge made of cubes, 12 * 20^level triangles.
inline std::vector<Triangle> generate_scene(const std::string& name, const nlohmann::json& params = {}) {
  std::vector<Triangle> out;
  if (name == "grid") {
    const int n = detail::param(params, "n", 8);
    const float size = detail::param(params, "size", 2.f);
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "grid n must be >= 1");
    const float step = size / static_cast<float>(n);
    const float lo = -0.5f * size;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const float x0 = lo + i * step, x1 = lo + (i + 1) * step;
        const float z0 = lo + j * step, z1 = lo + (j + 1) * step;
        detail::push_quad(out, {x0, 0.f, z0}, {x0, 0.f, z1}, {x1, 0.f, z1}, {x1, 0.f, z0});
      }
  } else if (name == "spheres") {
    const int count = detail::param(params, "count", 4);
    const int tess = detail::param(params, "tessellation", 16);
    const float radius = detail::param(params, "radius", 0.4f);
    const float spacing = detail::param(params, "spacing", 1.f);
    if (count < 1 || tess < 3) throw Error(ErrorKind::InvalidArgument, "spheres needs count >= 1, tessellation >= 3");
    const float offset = 0.5f * spacing * static_cast<float>(count - 1);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < count; ++j)
        detail::uv_sphere(out, {i * spacing - offset, 0.f, j * spacing - offset}, radius, tess);
  } else if (name == "menger") {
    const int level = detail::param(params, "level", 2);
    const float size = detail::param(params, "size", 1.f);
    if (level < 0 || level > 3) throw Error(ErrorKind::InvalidArgument, "menger level must be in [0, 3]");
    detail::menger(out, {-0.5f * size, -0.5f * size, -0.5f * size}, size, level);
  } else {
    throw Error(ErrorKind::UnknownGenerator, "unknown generator '" + name + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON scene description (schema version 1).

struct MeshDescription {
  std::variant<std::filesystem::path, std::string> source;  // OBJ path or generator name
  nlohmann::json params = nlohmann::json::object();          // generator parameters
  Transform transform;
  Material material;
};

struct SceneDescription {
  std::string name;
  std::vector<MeshDescription> meshes;
  Camera camera;
  std::vector<PointLight> lights;
  Vec3 background{0.f, 0.f, 0.f};
  std::filesystem::path base_dir;  // relative OBJ paths resolve against this
};

/// A ready-to-render scene. `material_of[id]` indexes `materials` for triangle `id`.
struct Scene {
  std::string name;
  std::vector<Triangle> triangles;
  std::vector<std::uint32_t> material_of;
  std::vector<Material> materials;
  Camera camera;
  std::vector<PointLight> lights;
  Vec3 background;
  std::size_t degenerate_dropped = 0;
};

namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorKind::ParseError, std::string(what) + " must be an array of 3 numbers");
  try {
    return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::ParseError, std::string(what) + " must contain numbers");
  }
}

inline Transform json_transform(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (j.contains("matrix")) {
    const auto& m = j.at("matrix");
    if (!m.is_array() || m.size() != 16) throw Error(ErrorKind::ParseError, "transform.matrix needs 16 numbers");
    Transform t;
    for (int i = 0; i < 16; ++i) t.m[i] = m[i].get<double>();
    return t;
  }
  Transform t;
  if (j.contains("scale")) {
    const auto& s = j.at("scale");
    t = s.is_number() ? Transform::scale({s.get<float>(), s.get<float>(), s.get<float>()})
                      : Transform::scale(json_vec3(s, "transform.scale"));
  }
  if (j.contains("rotate_y")) t = Transform::rotate_y(j.at("rotate_y").get<double>()) * t;
  if (j.contains("translate")) t = Transform::translate(json_vec3(j.at("translate"), "transform.translate")) * t;
  return t;
}

}  // namespace detail

inline SceneDescription parse_scene_description(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  SceneDescription d;
  d.base_dir = base_dir;
  try {
    if (j.value("version", 0) != 1) throw Error(ErrorKind::ParseError, "scene \"version\" must be 1");
    d.name = j.value("name", std::string("scene"));
    const auto& cam = j.at("camera");
    d.camera.position = detail::json_vec3(cam.at("position"), "camera.position");
    d.camera.look_at = detail::json_vec3(cam.at("look_at"), "camera.look_at");
    if (cam.contains("up")) d.camera.up = detail::json_vec3(cam.at("up"), "camera.up");
    d.camera.vertical_fov = cam.value("vertical_fov", 40.f);
    if (cam.contains("resolution")) {
      d.camera.width = cam.at("resolution").at(0).get<std::uint32_t>();
      d.camera.height = cam.at("resolution").at(1).get<std::uint32_t>();
    }
    for (const auto& l : j.at("lights")) {
      PointLight light;
      light.position = detail::json_vec3(l.at("position"), "light.position");
      if (l.contains("intensity")) light.intensity = detail::json_vec3(l.at("intensity"), "light.intensity");
      d.lights.push_back(light);
    }
    if (j.contains("background")) d.background = detail::json_vec3(j.at("background"), "background");
    for (const auto& m : j.at("meshes")) {
      MeshDescription mesh;
      if (m.contains("obj")) {
        mesh.source = std::filesystem::path(m.at("obj").get<std::string>());
      } else if (m.contains("generator")) {
        mesh.source = m.at("generator").get<std::string>();
        if (m.contains("params")) mesh.params = m.at("params");
      } else {
        throw Error(ErrorKind::ParseError, "mesh needs an \"obj\" or \"generator\" field");
      }
      mesh.transform = detail::json_transform(m.value("transform", nlohmann::json()));
      if (m.contains("albedo")) mesh.material.albedo = detail::json_vec3(m.at("albedo"), "mesh.albedo");
      mesh.material.reflective = m.value("reflective", false);
      d.meshes.push_back(std::move(mesh));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("scene description: ") + e.what());
  }

  if (d.meshes.empty()) throw Error(ErrorKind::InvalidArgument, "scene needs at least one mesh");
  if (d.lights.empty()) throw Error(ErrorKind::InvalidArgument, "scene needs at least one light");
  for (const auto& l : d.lights)
    if (l.intensity.x < 0 || l.intensity.y < 0 || l.intensity.z < 0)
      throw Error(ErrorKind::InvalidArgument, "light intensity must be non-negative");
  for (const auto& m : d.meshes)
    if (!m.transform.invertible()) throw Error(ErrorKind::InvalidArgument, "mesh transform is not invertible");
  if (!(d.camera.vertical_fov > 0.f && d.camera.vertical_fov < 180.f))
    throw Error(ErrorKind::InvalidArgument, "camera.vertical_fov must be in (0, 180)");
  if (d.camera.width < 1 || d.camera.height < 1)
    throw Error(ErrorKind::InvalidArgument, "camera resolution must be at least 1x1");
  return d;
}

inline SceneDescription load_scene_description(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open scene file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  auto d = parse_scene_description(j, path.parent_path());
  if (!j.contains("name")) d.name = path.stem().string();
  return d;
}

/// Loads or generates every mesh, applies transforms, drops degenerate
/// triangles and assigns dense triangle ids in mesh order.
inline Scene build_scene(const SceneDescription& d) {
  Scene s;
  s.name = d.name;
  s.camera = d.camera;
  s.lights = d.lights;
  s.background = d.background;
  for (const MeshDescription& mesh : d.meshes) {
    std::vector<Triangle> tris;
    if (const auto* path = std::get_if<std::filesystem::path>(&mesh.source)) {
      tris = load_obj(path->is_absolute() ? *path : d.base_dir / *path);
    } else {
      tris = generate_scene(std::get<std::string>(mesh.source), mesh.params);
    }
    tris = transformed(std::move(tris), mesh.transform);
    s.degenerate_dropped += drop_degenerate(tris);
    const auto material = static_cast<std::uint32_t>(s.materials.size());
    s.materials.push_back(mesh.material);
    for (Triangle& t : tris) {
      t.id = static_cast<PrimIndex>(s.triangles.size());
      s.triangles.push_back(t);
      s.material_of.push_back(material);
    }
  }
  if (s.degenerate_dropped > 0)
    log_info(s.name + ": dropped " + std::to_string(s.degenerate_dropped) + " degenerate triangle(s)");
  if (s.triangles.empty()) throw Error(ErrorKind::EmptyScene, s.name + ": no valid triangles");
  return s;
}

inline Scene load_scene(const std::filesystem::path& path) { return build_scene(load_scene_description(path)); }

}  // namespace hrpp
