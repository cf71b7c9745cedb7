// SPDX-License-Identifier: Apache-2.0
#pragma once

// Test-only oracles and generators. Nothing here calls into the BVH, so the
// brute-force answers stay independent of the traversal code they check.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hrpp/geom.hpp"

namespace hrpp::testing {

inline std::optional<HitRecord> brute_closest(std::span<const Triangle> tris, const Ray& ray) {
  std::optional<HitRecord> best;
  for (const Triangle& t : tris) {
    auto h = ray_triangle_intersect(ray, t);
    if (h && (!best || closer(*h, *best))) best = h;
  }
  return best;
}

inline bool brute_any(std::span<const Triangle> tris, const Ray& ray) {
  for (const Triangle& t : tris)
    if (ray_triangle_intersect(ray, t)) return true;
  return false;
}

inline float uniform(std::mt19937_64& rng, float lo, float hi) {
  return std::uniform_real_distribution<float>(lo, hi)(rng);
}

inline Vec3 random_point(std::mt19937_64& rng, float lo, float hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.f, 1.f);
  for (;;) {
    const Vec3 d{n(rng), n(rng), n(rng)};
    if (length(d) > 1e-3f) return normalize(d);
  }
}

/// Triangles with vertices near a random center, ids 0..n-1.
inline std::vector<Triangle> random_soup(std::mt19937_64& rng, std::size_t n, float extent = 1.f,
                                         float size = 0.3f) {
  std::vector<Triangle> tris;
  while (tris.size() < n) {
    const Vec3 c = random_point(rng, -extent, extent);
    Triangle t{c + random_point(rng, -size, size), c + random_point(rng, -size, size),
               c + random_point(rng, -size, size), static_cast<PrimIndex>(tris.size())};
    if (t.area() > 1e-4f) tris.push_back(t);
  }
  return tris;
}

inline Ray random_ray(std::mt19937_64& rng, RayKind kind, float extent = 2.f) {
  return make_ray(random_point(rng, -extent, extent), random_direction(rng), kind);
}

/// Eight unit triangles in the z=0 plane centered at x = 0, 2, ..., 14.
/// With max_leaf_size 1 the builder produces a perfect 3-level tree.
inline std::vector<Triangle> separated_triangles(int n = 8) {
  std::vector<Triangle> tris;
  for (int i = 0; i < n; ++i) {
    const float x = 2.f * static_cast<float>(i);
    tris.push_back({{x - 0.5f, -0.5f, 0.f}, {x + 0.5f, -0.5f, 0.f}, {x, 0.5f, 0.f}, static_cast<PrimIndex>(i)});
  }
  return tris;
}

/// Ray along +z through the center of separated triangle `i`.
inline Ray ray_at_triangle(int i, RayKind kind = RayKind::ClosestHit) {
  return make_ray({2.f * static_cast<float>(i), -0.1f, -1.f}, {0.f, 0.f, 1.f}, kind);
}

}  // namespace hrpp::testing
