// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "hrpp/bvh.hpp"
#include "hrpp/error.hpp"
#include "hrpp/geom.hpp"
#include "hrpp/metrics.hpp"
#include "hrpp/predictor.hpp"
#include "hrpp/scene.hpp"

namespace hrpp {

enum class RenderMode : std::uint8_t { Baseline, Limit, Live };

/// Where samples land inside a pixel. `Jittered` is stratified random
/// sampling; the two others are deterministic and ignore the seed.
enum class PixelSampling : std::uint8_t { Jittered, StratumCenter, PixelCenter };

inline const char* to_string(RenderMode m) {
  switch (m) {
    case RenderMode::Baseline: return "baseline";
    case RenderMode::Limit: return "limit";
    case RenderMode::Live: return "live";
  }
  return "?";
}

struct RenderConfig {
  std::uint32_t spp = 8;
  std::uint32_t max_reflection_depth = 2;
  RenderMode mode = RenderMode::Baseline;
  std::uint64_t rng_seed = 0;
  PixelSampling sampling = PixelSampling::Jittered;
  std::uint32_t threads = 1;  // 1 = deterministic single worker
};

/// Predictor tables consulted by `render`. Either may be null, in which case
/// rays of that kind always take the full traversal.
struct PredictorSet {
  PredictorTable* hit_any = nullptr;
  PredictorTable* closest = nullptr;
};

/// Shadow-ray outcome per (pixel, sample, light) for rays cast from primary hits.
enum class Occlusion : std::uint8_t { NoShadowRay = 0, Unoccluded = 1, Occluded = 2 };

/// The hit a primary sample resolved to, for comparing renders.
struct PrimarySample {
  PrimIndex triangle_id = 0;
  float t = 0.f;
  bool hit = false;
  friend bool operator==(const PrimarySample&, const PrimarySample&) = default;
};

struct RenderOutput {
  std::uint32_t width = 0, height = 0, spp = 0, light_count = 0;
  std::vector<Vec3> image;  // linear RGB, row-major
  RayKindStats primary, shadow, reflection;
  std::vector<Occlusion> occlusion;        // [(pixel * spp + sample) * light_count + light]
  std::vector<PrimarySample> primary_hits;  // [pixel * spp + sample]

  RayKindStats hit_all() const { return primary + reflection; }
};

inline constexpr float kShadowOffset = 1e-4f;
inline constexpr float kMirrorReflectance = 0.8f;

// ---------------------------------------------------------------------------
// Counter-based sampling: every random number is a pure function of
// (seed, pixel, sample, dimension) so any schedule reproduces the same rays.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline float counter_uniform(std::uint64_t seed, std::uint64_t pixel, std::uint32_t sample, std::uint32_t dim) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ pixel);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(sample) << 8 | dim));
  return static_cast<float>(h >> 40) * 0x1p-24f;  // 24 bits -> [0, 1)
}

/// Strata grid for `spp` samples: nx is the largest divisor of spp <= sqrt(spp).
inline std::pair<std::uint32_t, std::uint32_t> strata(std::uint32_t spp) {
  std::uint32_t nx = 1;
  for (std::uint32_t d = 1; d * d <= spp; ++d)
    if (spp % d == 0) nx = d;
  return {nx, spp / nx};
}

struct CameraFrame {
  Vec3 origin, forward, right, up;
  float tan_half = 0.f, aspect = 1.f;
  std::uint32_t width = 1, height = 1;

  explicit CameraFrame(const Camera& c) : origin(c.position), width(c.width), height(c.height) {
    if (!(c.vertical_fov > 0.f && c.vertical_fov < 180.f))
      throw Error(ErrorKind::InvalidArgument, "vertical_fov must be in (0, 180)");
    if (c.width < 1 || c.height < 1) throw Error(ErrorKind::InvalidArgument, "resolution must be >= 1x1");
    forward = normalize(c.look_at - c.position);
    right = normalize(cross(forward, c.up));
    up = cross(right, forward);
    tan_half = static_cast<float>(std::tan(0.5 * c.vertical_fov * std::numbers::pi / 180.0));
    aspect = static_cast<float>(c.width) / static_cast<float>(c.height);
  }

  Ray ray_through(float px, float py) const {
    const float sx = (2.f * px - 1.f) * tan_half * aspect;
    const float sy = (1.f - 2.f * py) * tan_half;
    return make_ray(origin, forward + right * sx + up * sy, RayKind::ClosestHit);
  }
};

inline Ray primary_ray(const CameraFrame& frame, const RenderConfig& cfg, std::uint32_t x, std::uint32_t y,
                       std::uint32_t sample) {
  float fx = 0.5f, fy = 0.5f;
  if (cfg.sampling != PixelSampling::PixelCenter) {
    const auto [nx, ny] = strata(cfg.spp);
    float jx = 0.5f, jy = 0.5f;
    if (cfg.sampling == PixelSampling::Jittered) {
      const std::uint64_t pixel = static_cast<std::uint64_t>(y) * frame.width + x;
      jx = counter_uniform(cfg.rng_seed, pixel, sample, 0);
      jy = counter_uniform(cfg.rng_seed, pixel, sample, 1);
    }
    fx = (static_cast<float>(sample % nx) + jx) / static_cast<float>(nx);
    fy = (static_cast<float>(sample / nx) + jy) / static_cast<float>(ny);
  }
  return frame.ray_through((static_cast<float>(x) + fx) / static_cast<float>(frame.width),
                           (static_cast<float>(y) + fy) / static_cast<float>(frame.height));
}

/// All primary rays, row-major pixels, `spp` consecutive samples per pixel.
inline std::vector<Ray> generate_primary_rays(const Camera& camera, const RenderConfig& cfg) {
  if (cfg.spp < 1) throw Error(ErrorKind::InvalidArgument, "spp must be >= 1");
  const CameraFrame frame(camera);
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(camera.width) * camera.height * cfg.spp);
  for (std::uint32_t y = 0; y < camera.height; ++y)
    for (std::uint32_t x = 0; x < camera.width; ++x)
      for (std::uint32_t s = 0; s < cfg.spp; ++s) rays.push_back(primary_ray(frame, cfg, x, y, s));
  return rays;
}

namespace detail {

/// Lookups take a shared lock and training an exclusive one when a mutex is
/// supplied (parallel mode); without one everything runs unlocked.
class PredictorGate {
 public:
  explicit PredictorGate(std::shared_mutex* mutex) : mutex_(mutex) {}

  PredictionOutcome predict(const PredictorTable& t, const Bvh& bvh, const Ray& r) const {
    if (!mutex_) return hrpp::predict(t, bvh, r);
    std::shared_lock lock(*mutex_);
    return hrpp::predict(t, bvh, r);
  }
  void train(PredictorTable& t, const Bvh& bvh, PredictorKey key, const HitRecord& hit) const {
    if (!mutex_) {
      train_from_traversal(t, bvh, key, hit);
      return;
    }
    std::unique_lock lock(*mutex_);
    train_from_traversal(t, bvh, key, hit);
  }

 private:
  std::shared_mutex* mutex_;
};

struct WorkerStats {
  RayKindStats primary, shadow, reflection;
};

enum class Population : std::uint8_t { Primary, Shadow, Reflection };

class Integrator {
 public:
  Integrator(const Scene& scene, const Bvh& bvh, PredictorSet tables, const RenderConfig& cfg,
             std::shared_mutex* mutex)
      : scene_(scene), bvh_(bvh), tables_(tables), cfg_(cfg), gate_(mutex) {}

  /// Radiance along a primary or reflection ray. For primary rays `mask`
  /// receives one entry per light and `primary` the resolved hit.
  Vec3 radiance(const Ray& ray, std::uint32_t depth, WorkerStats& ws, Occlusion* mask,
               PrimarySample* primary = nullptr) const {
    const auto hit = trace(ray, depth == 0 ? Population::Primary : Population::Reflection, ws);
    if (primary && hit) *primary = {hit->triangle_id, hit->t, true};
    if (!hit) return scene_.background;

    const Triangle& tri = bvh_.triangle(hit->triangle_id);
    const Material& mat = scene_.materials[scene_.material_of[hit->triangle_id]];
    const Vec3 p = tri.v0 + (tri.v1 - tri.v0) * hit->u + (tri.v2 - tri.v0) * hit->v;
    Vec3 n = tri.geometric_normal();
    if (dot(n, ray.direction) > 0.f) n = -n;

    Vec3 color{};
    for (std::size_t li = 0; li < scene_.lights.size(); ++li) {
      const PointLight& light = scene_.lights[li];
      const Vec3 to_light = light.position - p;
      const float dist2 = dot(to_light, to_light);
      const float cos_theta = dot(n, to_light) / std::sqrt(dist2);
      const Vec3 origin = p + n * (cos_theta >= 0.f ? kShadowOffset : -kShadowOffset);
      const Vec3 dir = light.position - origin;
      const float dist = length(dir);
      const bool occluded =
          dist > 0.f && trace(make_ray(origin, dir, RayKind::HitAny, 0.f, dist), Population::Shadow, ws).has_value();
      if (mask) mask[li] = occluded ? Occlusion::Occluded : Occlusion::Unoccluded;
      if (!occluded && cos_theta > 0.f) color += mat.albedo * light.intensity * (cos_theta / dist2);
    }

    if (mat.reflective && depth < cfg_.max_reflection_depth) {
      const Vec3 refl = ray.direction - n * (2.f * dot(ray.direction, n));
      const Ray r = make_ray(p + n * kShadowOffset, refl, RayKind::ClosestHit);
      color = color * (1.f - kMirrorReflectance) + radiance(r, depth + 1, ws, nullptr) * kMirrorReflectance;
    }
    return color;
  }

 private:
  std::optional<HitRecord> full_traversal(const Ray& ray, TraversalCounters& c) const {
    return ray.kind == RayKind::HitAny ? intersect_any(bvh_, ray, c) : intersect_closest(bvh_, ray, c);
  }

  static void add_baseline(RayKindStats& s, const TraversalCounters& c) {
    s.baseline_box_tests += c.interior_box_tests;
    s.baseline_total_box_tests += c.box_tests;
    s.baseline_tri_tests += c.tri_tests;
  }

  std::optional<HitRecord> trace(const Ray& ray, Population pop, WorkerStats& ws) const {
    RayKindStats& s = pop == Population::Primary ? ws.primary
                      : pop == Population::Shadow ? ws.shadow
                                                  : ws.reflection;
    PredictorTable* table = ray.kind == RayKind::HitAny ? tables_.hit_any : tables_.closest;
    ++s.rays;

    if (cfg_.mode == RenderMode::Baseline || table == nullptr) {
      TraversalCounters c;
      auto hit = full_traversal(ray, c);
      add_baseline(s, c);
      s.hits += hit ? 1 : 0;
      return hit;
    }

    const PredictionOutcome out = gate_.predict(*table, bvh_, ray);
    ++s.consulted;
    s.overhead_box_tests += out.overhead.interior_box_tests;
    s.overhead_total_box_tests += out.overhead.box_tests;
    s.overhead_tri_tests += out.overhead.tri_tests;
    switch (out.prediction) {
      case Prediction::TruePositive: ++s.tp; break;
      case Prediction::FalsePositive: ++s.fp; break;
      case Prediction::Negative: ++s.neg; break;
    }

    if (cfg_.mode == RenderMode::Live && out.prediction == Prediction::TruePositive) {
      const std::uint64_t depth = bvh_.nodes[out.hit->leaf_node].depth;
      s.estimated_skipped_box_tests += depth > out.overhead.interior_box_tests ? depth - out.overhead.interior_box_tests : 0;
      ++s.hits;
      return out.hit;
    }

    TraversalCounters c;
    auto hit = full_traversal(ray, c);
    add_baseline(s, c);
    s.hits += hit ? 1 : 0;

    if (out.prediction == Prediction::TruePositive) {
      // Limit mode only: exact savings and the closest-hit oracle check.
      if (c.interior_box_tests > out.overhead.interior_box_tests)
        s.skipped_box_tests += c.interior_box_tests - out.overhead.interior_box_tests;
      if (ray.kind == RayKind::ClosestHit && !(hit && hit->t == out.hit->t && hit->triangle_id == out.hit->triangle_id))
        ++s.wrong_closest;
    } else if (hit) {
      gate_.train(*table, bvh_, out.key, *hit);
    }
    return hit;
  }

  const Scene& scene_;
  const Bvh& bvh_;
  PredictorSet tables_;
  const RenderConfig& cfg_;
  PredictorGate gate_;
};

}  // namespace detail

/// Renders the scene's camera view. Baseline mode never touches the tables.
/// Limit mode predicts and fully traverses every ray, shading with the full
/// traversal result. Live mode shades true positives with the predicted hit.
inline RenderOutput render(const Scene& scene, const Bvh& bvh, PredictorSet tables, const RenderConfig& cfg) {
  if (cfg.spp < 1) throw Error(ErrorKind::InvalidArgument, "spp must be >= 1");
  if (tables.hit_any && tables.hit_any->kind() != RayKind::HitAny)
    throw Error(ErrorKind::InvalidArgument, "hit-any table has the wrong ray kind");
  if (tables.closest && tables.closest->kind() != RayKind::ClosestHit)
    throw Error(ErrorKind::InvalidArgument, "closest-hit table has the wrong ray kind");

  const CameraFrame frame(scene.camera);
  RenderOutput out;
  out.width = scene.camera.width;
  out.height = scene.camera.height;
  out.spp = cfg.spp;
  out.light_count = static_cast<std::uint32_t>(scene.lights.size());
  out.image.assign(static_cast<std::size_t>(out.width) * out.height, Vec3{});
  out.occlusion.assign(out.image.size() * cfg.spp * out.light_count, Occlusion::NoShadowRay);
  out.primary_hits.assign(out.image.size() * cfg.spp, PrimarySample{});

  const bool parallel = cfg.threads > 1;
  std::shared_mutex table_mutex;
  const detail::Integrator integrator(scene, bvh, tables, cfg, parallel ? &table_mutex : nullptr);

  auto render_row = [&](std::uint32_t y, detail::WorkerStats& ws) {
    for (std::uint32_t x = 0; x < out.width; ++x) {
      const std::size_t pixel = static_cast<std::size_t>(y) * out.width + x;
      Vec3 sum{};
      for (std::uint32_t s = 0; s < cfg.spp; ++s) {
        const std::size_t sample = pixel * cfg.spp + s;
        Occlusion* mask = out.occlusion.data() + sample * out.light_count;
        sum += integrator.radiance(primary_ray(frame, cfg, x, y, s), 0, ws, mask, &out.primary_hits[sample]);
      }
      out.image[pixel] = sum / static_cast<float>(cfg.spp);
    }
  };

  std::vector<detail::WorkerStats> worker_stats(parallel ? cfg.threads : 1);
  if (!parallel) {
    for (std::uint32_t y = 0; y < out.height; ++y) render_row(y, worker_stats[0]);
  } else {
    std::atomic<std::uint32_t> next_row{0};
    std::vector<std::exception_ptr> errors(cfg.threads);
    std::vector<std::thread> workers;
    for (std::uint32_t w = 0; w < cfg.threads; ++w)
      workers.emplace_back([&, w] {
        try {
          for (std::uint32_t y; (y = next_row.fetch_add(1)) < out.height;) render_row(y, worker_stats[w]);
        } catch (...) {
          errors[w] = std::current_exception();
          next_row = out.height;
        }
      });
    for (auto& t : workers) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto& ws : worker_stats) {
    out.primary += ws.primary;
    out.shadow += ws.shadow;
    out.reflection += ws.reflection;
  }
  return out;
}

inline std::uint8_t encode_channel(float linear) {
  const float c = std::clamp(linear, 0.f, 1.f);
  return static_cast<std::uint8_t>(std::lround(255.f * std::pow(c, 1.f / 2.2f)));
}

/// 8-bit sRGB-ish bytes (gamma 2.2), row-major RGB triplets.
inline std::vector<std::uint8_t> to_rgb8(const RenderOutput& out) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(out.image.size() * 3);
  for (const Vec3& c : out.image) {
    bytes.push_back(encode_channel(c.x));
    bytes.push_back(encode_channel(c.y));
    bytes.push_back(encode_channel(c.z));
  }
  return bytes;
}

inline void write_ppm(std::ostream& os, const RenderOutput& out) {
  os << "P6\n" << out.width << ' ' << out.height << "\n255\n";
  const auto bytes = to_rgb8(out);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void write_ppm(const std::filesystem::path& path, const RenderOutput& out) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_ppm(os, out);
}

}  // namespace hrpp
