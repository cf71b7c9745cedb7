// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "hrpp/error.hpp"

namespace hrpp {

using NodeIndex = std::uint32_t;
using PrimIndex = std::uint32_t;

inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();

struct Vec3 {
  float x = 0.f, y = 0.f, z = 0.f;

  constexpr float operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr float& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, float s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(float s, Vec3 a) { return a * s; }
  friend constexpr Vec3 operator*(Vec3 a, Vec3 b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
  friend constexpr Vec3 operator/(Vec3 a, float s) { return {a.x / s, a.y / s, a.z / s}; }
  Vec3& operator+=(Vec3 b) { return *this = *this + b; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr float dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline float length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(Vec3 a) { return a / length(a); }
inline Vec3 min(Vec3 a, Vec3 b) { return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)}; }
inline Vec3 max(Vec3 a, Vec3 b) { return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)}; }
inline bool is_finite(Vec3 a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

enum class RayKind : std::uint8_t { HitAny, ClosestHit };

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  float t_min = 0.f;
  float t_max = std::numeric_limits<float>::infinity();
  RayKind kind = RayKind::ClosestHit;
};

/// Builds a ray with a normalized direction. Throws NonFiniteInput on NaN/Inf
/// components or a zero direction.
inline Ray make_ray(Vec3 origin, Vec3 direction, RayKind kind,
                    float t_min = 0.f, float t_max = std::numeric_limits<float>::infinity()) {
  if (!is_finite(origin) || !is_finite(direction))
    throw Error(ErrorKind::NonFiniteInput, "ray origin/direction must be finite");
  const float len = length(direction);
  if (!(len > 0.f)) throw Error(ErrorKind::NonFiniteInput, "ray direction has zero length");
  if (!(t_min >= 0.f) || !(t_max > t_min))
    throw Error(ErrorKind::InvalidArgument, "ray extent must satisfy 0 <= t_min < t_max");
  return Ray{origin, direction / len, t_min, t_max, kind};
}

inline bool is_valid(const Ray& r) {
  return is_finite(r.origin) && is_finite(r.direction) &&
         std::abs(length(r.direction) - 1.f) <= 1e-4f && r.t_min >= 0.f && r.t_max > r.t_min;
}

struct Aabb {
  Vec3 min{std::numeric_limits<float>::infinity(), std::numeric_limits<float>::infinity(),
           std::numeric_limits<float>::infinity()};
  Vec3 max{-std::numeric_limits<float>::infinity(), -std::numeric_limits<float>::infinity(),
           -std::numeric_limits<float>::infinity()};

  bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
  void grow(Vec3 p) {
    min = hrpp::min(min, p);
    max = hrpp::max(max, p);
  }
  void grow(const Aabb& b) {
    min = hrpp::min(min, b.min);
    max = hrpp::max(max, b.max);
  }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5f; }
  float surface_area() const {
    if (empty()) return 0.f;
    const Vec3 e = extent();
    return 2.f * (e.x * e.y + e.y * e.z + e.z * e.x);
  }
  int largest_axis() const {
    const Vec3 e = extent();
    if (e.x >= e.y && e.x >= e.z) return 0;
    return e.y >= e.z ? 1 : 2;
  }
  bool contains(const Aabb& b, float eps = 0.f) const {
    for (int a = 0; a < 3; ++a)
      if (b.min[a] < min[a] - eps || b.max[a] > max[a] + eps) return false;
    return true;
  }
  friend bool operator==(const Aabb&, const Aabb&) = default;
};

struct Triangle {
  Vec3 v0, v1, v2;
  PrimIndex id = 0;

  Aabb bounds() const {
    Aabb b;
    b.grow(v0);
    b.grow(v1);
    b.grow(v2);
    return b;
  }
  Vec3 centroid() const { return (v0 + v1 + v2) * (1.f / 3.f); }
  Vec3 geometric_normal() const { return normalize(cross(v1 - v0, v2 - v0)); }
  float area() const { return 0.5f * length(cross(v1 - v0, v2 - v0)); }
  friend bool operator==(const Triangle&, const Triangle&) = default;
};

inline constexpr float kDegenerateArea = 1e-12f;

/// Drops triangles with area <= 1e-12 or non-finite vertices, renumbering ids
/// densely. Returns the number dropped.
inline std::size_t drop_degenerate(std::vector<Triangle>& tris) {
  const std::size_t before = tris.size();
  std::erase_if(tris, [](const Triangle& t) {
    return !is_finite(t.v0) || !is_finite(t.v1) || !is_finite(t.v2) || !(t.area() > kDegenerateArea);
  });
  for (std::size_t i = 0; i < tris.size(); ++i) tris[i].id = static_cast<PrimIndex>(i);
  return before - tris.size();
}

struct HitRecord {
  float t = 0.f;
  PrimIndex triangle_id = 0;
  NodeIndex leaf_node = kNoNode;
  float u = 0.f, v = 0.f;
  friend bool operator==(const HitRecord&, const HitRecord&) = default;
};

/// Strict ordering used to pick the closest of several hits: smaller t wins,
/// equal t falls back to the smaller triangle id so results never depend on
/// visit order.
inline bool closer(const HitRecord& a, const HitRecord& b) {
  return a.t < b.t || (a.t == b.t && a.triangle_id < b.triangle_id);
}

struct SlabResult {
  bool hit = false;
  float t_enter = 0.f;
  float t_exit = 0.f;
  explicit operator bool() const { return hit; }
};

inline Vec3 reciprocal(Vec3 d) { return {1.f / d.x, 1.f / d.y, 1.f / d.z}; }

namespace detail {
// Relative widening applied to both slab distances (3 roundings each). The
// entry side matters once t_max is clipped to a hit lying on a box face.
inline constexpr float kSlabWiden = [] {
  constexpr float half_eps = std::numeric_limits<float>::epsilon() * 0.5f;
  constexpr float gamma3 = (3 * half_eps) / (1 - 3 * half_eps);
  return 2.f * gamma3;
}();
}  // namespace detail

/// Slab test with a precomputed reciprocal direction. Boundary contact counts
/// as a hit. Zero direction components follow the signed-infinity convention:
/// the slab is either the whole line or empty depending on the origin.
inline SlabResult ray_aabb_intersect(const Ray& ray, Vec3 inv_dir, const Aabb& box) {
  float t0 = ray.t_min;
  float t1 = ray.t_max;
  for (int a = 0; a < 3; ++a) {
    if (ray.direction[a] == 0.f) {
      if (ray.origin[a] < box.min[a] || ray.origin[a] > box.max[a]) return {false, t0, t1};
      continue;
    }
    float t_near = (box.min[a] - ray.origin[a]) * inv_dir[a];
    float t_far = (box.max[a] - ray.origin[a]) * inv_dir[a];
    if (t_near > t_far) std::swap(t_near, t_far);
    t_near -= std::abs(t_near) * detail::kSlabWiden;
    t_far += std::abs(t_far) * detail::kSlabWiden;
    t0 = t_near > t0 ? t_near : t0;
    t1 = t_far < t1 ? t_far : t1;
    if (t0 > t1) return {false, t0, t1};
  }
  return {true, t0, t1};
}

inline SlabResult ray_aabb_intersect(const Ray& ray, const Aabb& box) {
  return ray_aabb_intersect(ray, reciprocal(ray.direction), box);
}

inline constexpr double kDeterminantEpsilon = 1e-9;

/// Möller–Trumbore in double precision. Rays (near-)parallel to the plane,
/// |det| <= 1e-9, never hit. Barycentric bounds are inclusive, so a ray
/// through a shared edge hits both triangles at the same t; `closer` then
/// reports exactly one of them.
inline std::optional<HitRecord> ray_triangle_intersect(const Ray& ray, const Triangle& tri) {
  const double ox = ray.origin.x, oy = ray.origin.y, oz = ray.origin.z;
  const double dx = ray.direction.x, dy = ray.direction.y, dz = ray.direction.z;
  const double ax = tri.v0.x, ay = tri.v0.y, az = tri.v0.z;
  const double e1x = double(tri.v1.x) - ax, e1y = double(tri.v1.y) - ay, e1z = double(tri.v1.z) - az;
  const double e2x = double(tri.v2.x) - ax, e2y = double(tri.v2.y) - ay, e2z = double(tri.v2.z) - az;

  const double px = dy * e2z - dz * e2y, py = dz * e2x - dx * e2z, pz = dx * e2y - dy * e2x;
  const double det = e1x * px + e1y * py + e1z * pz;
  if (!(std::abs(det) > kDeterminantEpsilon)) return std::nullopt;
  const double inv_det = 1.0 / det;

  const double sx = ox - ax, sy = oy - ay, sz = oz - az;
  const double u = (sx * px + sy * py + sz * pz) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;

  const double qx = sy * e1z - sz * e1y, qy = sz * e1x - sx * e1z, qz = sx * e1y - sy * e1x;
  const double v = (dx * qx + dy * qy + dz * qz) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;

  const float t = static_cast<float>((e2x * qx + e2y * qy + e2z * qz) * inv_det);
  if (!(t >= ray.t_min && t <= ray.t_max)) return std::nullopt;

  HitRecord hit;
  hit.t = t;
  hit.triangle_id = tri.id;
  hit.u = static_cast<float>(u);
  hit.v = static_cast<float>(v);
  // Rounding to float must not break u, v >= 0 and u + v <= 1.
  while (hit.u + hit.v > 1.f) hit.v = std::nextafter(hit.v, 0.f);
  return hit;
}

}  // namespace hrpp
