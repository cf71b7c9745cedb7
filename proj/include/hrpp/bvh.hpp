// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hrpp/error.hpp"
#include "hrpp/geom.hpp"
#include "hrpp/log.hpp"

namespace hrpp {

struct BvhNode {
  Aabb bounds;
  NodeIndex parent = kNoNode;
  // Interior: children. Leaf: [first_prim, first_prim + prim_count) into Bvh::prims.
  NodeIndex left = kNoNode;
  NodeIndex right = kNoNode;
  std::uint32_t first_prim = 0;
  std::uint32_t prim_count = 0;
  std::uint32_t depth = 0;
  std::uint8_t split_axis = 0;

  bool is_leaf() const { return prim_count > 0; }
  std::optional<NodeIndex> parent_index() const {
    return parent == kNoNode ? std::nullopt : std::optional<NodeIndex>(parent);
  }
};

/// Tally of work done by one or more traversals. `interior_box_tests` is the
/// subset of `box_tests` performed against interior nodes.
struct TraversalCounters {
  std::uint64_t box_tests = 0;
  std::uint64_t interior_box_tests = 0;
  std::uint64_t tri_tests = 0;
  std::uint64_t nodes_visited = 0;

  TraversalCounters& operator+=(const TraversalCounters& o) {
    box_tests += o.box_tests;
    interior_box_tests += o.interior_box_tests;
    tri_tests += o.tri_tests;
    nodes_visited += o.nodes_visited;
    return *this;
  }
  friend bool operator==(const TraversalCounters&, const TraversalCounters&) = default;
};

struct Bvh {
  std::vector<BvhNode> nodes;         // root = 0, depth-first preorder
  std::vector<Triangle> prims;        // triangles in leaf order
  std::vector<PrimIndex> prim_order;  // prim_order[i] == prims[i].id
  std::vector<std::uint32_t> slot_of_id;  // inverse of prim_order
  std::uint32_t max_depth = 0;
  std::uint32_t max_leaf_size = 0;
  std::size_t oversized_leaves = 0;

  const BvhNode& root() const { return nodes.front(); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(),
                                                  [](const BvhNode& n) { return n.is_leaf(); }));
  }
  const Triangle& triangle(PrimIndex id) const { return prims[slot_of_id.at(id)]; }
  std::span<const Triangle> leaf_prims(const BvhNode& n) const {
    return std::span<const Triangle>(prims).subspan(n.first_prim, n.prim_count);
  }
};

namespace detail {

inline constexpr int kSahBins = 16;

struct BuildItem {
  Aabb bounds;
  Vec3 centroid;
  PrimIndex id;
};

class BvhBuilder {
 public:
  BvhBuilder(std::span<const Triangle> tris, std::uint32_t max_leaf_size)
      : tris_(tris), max_leaf_(max_leaf_size) {}

  Bvh build() {
    items_.reserve(tris_.size());
    for (const Triangle& t : tris_) items_.push_back({t.bounds(), t.centroid(), t.id});
    bvh_.nodes.reserve(2 * items_.size());
    bvh_.max_leaf_size = max_leaf_;
    build_node(0, static_cast<std::uint32_t>(items_.size()), kNoNode, 0);

    bvh_.prims.reserve(items_.size());
    bvh_.slot_of_id.assign(max_id() + 1, 0);
    for (std::uint32_t slot = 0; slot < items_.size(); ++slot) {
      const PrimIndex id = items_[slot].id;
      bvh_.prim_order.push_back(id);
      bvh_.slot_of_id[id] = slot;
      bvh_.prims.push_back(tris_[index_of(id)]);
    }
    if (bvh_.oversized_leaves > 0)
      log_warning("bvh: " + std::to_string(bvh_.oversized_leaves) +
                  " leaves exceed max_leaf_size (coincident centroids)");
    return std::move(bvh_);
  }

 private:
  PrimIndex max_id() const {
    PrimIndex m = 0;
    for (const Triangle& t : tris_) m = std::max(m, t.id);
    return m;
  }
  std::size_t index_of(PrimIndex id) {
    if (id_to_input_.empty()) {
      id_to_input_.assign(max_id() + 1, 0);
      for (std::size_t i = 0; i < tris_.size(); ++i) id_to_input_[tris_[i].id] = i;
    }
    return id_to_input_[id];
  }

  NodeIndex build_node(std::uint32_t begin, std::uint32_t end, NodeIndex parent, std::uint32_t depth) {
    const auto index = static_cast<NodeIndex>(bvh_.nodes.size());
    bvh_.nodes.emplace_back();
    Aabb bounds, centroids;
    for (std::uint32_t i = begin; i < end; ++i) {
      bounds.grow(items_[i].bounds);
      centroids.grow(items_[i].centroid);
    }
    {
      BvhNode& node = bvh_.nodes[index];
      node.bounds = bounds;
      node.parent = parent;
      node.depth = depth;
    }
    bvh_.max_depth = std::max(bvh_.max_depth, depth);

    const std::uint32_t count = end - begin;
    const Vec3 cext = centroids.extent();
    if (count <= max_leaf_ || (cext.x <= 0.f && cext.y <= 0.f && cext.z <= 0.f)) {
      if (count > max_leaf_) ++bvh_.oversized_leaves;
      BvhNode& node = bvh_.nodes[index];
      node.first_prim = begin;
      node.prim_count = count;
      return index;
    }

    int axis = 0;
    std::uint32_t mid = sah_split(begin, end, bounds, centroids, axis);
    if (mid == begin || mid == end) {
      axis = centroids.largest_axis();
      mid = begin + count / 2;
      std::nth_element(items_.begin() + begin, items_.begin() + mid, items_.begin() + end,
                       [axis](const BuildItem& a, const BuildItem& b) {
                         return a.centroid[axis] < b.centroid[axis] ||
                                (a.centroid[axis] == b.centroid[axis] && a.id < b.id);
                       });
    }

    const NodeIndex left = build_node(begin, mid, index, depth + 1);
    const NodeIndex right = build_node(mid, end, index, depth + 1);
    BvhNode& node = bvh_.nodes[index];
    node.left = left;
    node.right = right;
    node.split_axis = static_cast<std::uint8_t>(axis);
    return index;
  }

  // Binned SAH over all three axes. Returns the partition point, or `begin`
  // when no split beats the leaf cost (caller falls back to a median split).
  std::uint32_t sah_split(std::uint32_t begin, std::uint32_t end, const Aabb& bounds,
                          const Aabb& centroids, int& best_axis) {
    const float parent_area = bounds.surface_area();
    const float leaf_cost = static_cast<float>(end - begin);
    float best_cost = std::numeric_limits<float>::infinity();
    int best_bin = -1;
    best_axis = 0;

    for (int axis = 0; axis < 3; ++axis) {
      const float lo = centroids.min[axis];
      const float ext = centroids.max[axis] - lo;
      if (!(ext > 0.f)) continue;
      std::array<Aabb, kSahBins> bin_bounds{};
      std::array<std::uint32_t, kSahBins> bin_count{};
      for (std::uint32_t i = begin; i < end; ++i) {
        const int b = bin_of(items_[i].centroid[axis], lo, ext);
        ++bin_count[b];
        bin_bounds[b].grow(items_[i].bounds);
      }
      std::array<float, kSahBins - 1> right_area{};
      std::array<std::uint32_t, kSahBins - 1> right_count{};
      Aabb acc;
      std::uint32_t n = 0;
      for (int b = kSahBins - 1; b > 0; --b) {
        acc.grow(bin_bounds[b]);
        n += bin_count[b];
        right_area[b - 1] = acc.surface_area();
        right_count[b - 1] = n;
      }
      acc = Aabb{};
      n = 0;
      for (int b = 0; b < kSahBins - 1; ++b) {
        acc.grow(bin_bounds[b]);
        n += bin_count[b];
        if (n == 0 || right_count[b] == 0) continue;
        const float cost = 1.f + (acc.surface_area() * static_cast<float>(n) +
                                  right_area[b] * static_cast<float>(right_count[b])) /
                                     parent_area;
        if (cost < best_cost) {
          best_cost = cost;
          best_bin = b;
          best_axis = axis;
        }
      }
    }
    if (best_bin < 0 || !(best_cost < leaf_cost)) return begin;

    const float lo = centroids.min[best_axis];
    const float ext = centroids.max[best_axis] - lo;
    const int axis = best_axis;
    auto it = std::stable_partition(items_.begin() + begin, items_.begin() + end,
                                    [&](const BuildItem& item) {
                                      return bin_of(item.centroid[axis], lo, ext) <= best_bin;
                                    });
    return static_cast<std::uint32_t>(it - items_.begin());
  }

  static int bin_of(float c, float lo, float ext) {
    const int b = static_cast<int>(static_cast<float>(kSahBins) * ((c - lo) / ext));
    return std::clamp(b, 0, kSahBins - 1);
  }

  std::span<const Triangle> tris_;
  std::uint32_t max_leaf_;
  std::vector<BuildItem> items_;
  std::vector<std::size_t> id_to_input_;
  Bvh bvh_;
};

// Explicit stack that stays on the machine stack for ordinary tree depths.
class NodeStack {
 public:
  void push(NodeIndex n) {
    if (size_ < inline_.size()) {
      inline_[size_++] = n;
    } else {
      overflow_.push_back(n);
      ++size_;
    }
  }
  NodeIndex pop() {
    --size_;
    if (size_ >= inline_.size()) {
      const NodeIndex n = overflow_.back();
      overflow_.pop_back();
      return n;
    }
    return inline_[size_];
  }
  bool empty() const { return size_ == 0; }

 private:
  std::array<NodeIndex, 64> inline_{};
  std::vector<NodeIndex> overflow_;
  std::size_t size_ = 0;
};

template <bool AnyHit>
std::optional<HitRecord> traverse(const Bvh& bvh, NodeIndex start, const Ray& ray,
                                  TraversalCounters& counters) {
  Ray r = ray;
  const Vec3 inv = reciprocal(r.direction);
  std::optional<HitRecord> best;
  NodeStack stack;
  stack.push(start);
  while (!stack.empty()) {
    const BvhNode& node = bvh.nodes[stack.pop()];
    ++counters.nodes_visited;
    ++counters.box_tests;
    if (!node.is_leaf()) ++counters.interior_box_tests;
    if (!ray_aabb_intersect(r, inv, node.bounds)) continue;

    if (node.is_leaf()) {
      const auto self = static_cast<NodeIndex>(&node - bvh.nodes.data());
      for (const Triangle& tri : bvh.leaf_prims(node)) {
        ++counters.tri_tests;
        auto hit = ray_triangle_intersect(r, tri);
        if (!hit) continue;
        hit->leaf_node = self;
        if constexpr (AnyHit) return hit;
        if (!best || closer(*hit, *best)) {
          best = hit;
          r.t_max = hit->t;
        }
      }
      continue;
    }
    // Near child first; a non-negative direction visits the left child first.
    if (r.direction[node.split_axis] >= 0.f) {
      stack.push(node.right);
      stack.push(node.left);
    } else {
      stack.push(node.left);
      stack.push(node.right);
    }
  }
  return best;
}

}  // namespace detail

/// Builds a binary BVH with 16-bin SAH splits and a median-split fallback.
/// Throws EmptyScene if `triangles` is empty.
inline Bvh build_bvh(std::span<const Triangle> triangles, std::uint32_t max_leaf_size = 4) {
  if (triangles.empty()) throw Error(ErrorKind::EmptyScene, "no triangles to build a BVH over");
  if (max_leaf_size == 0) throw Error(ErrorKind::InvalidArgument, "max_leaf_size must be >= 1");
  return detail::BvhBuilder(triangles, max_leaf_size).build();
}

/// Minimal-t hit over the whole tree.
inline std::optional<HitRecord> intersect_closest(const Bvh& bvh, const Ray& ray,
                                                  TraversalCounters& counters) {
  return detail::traverse<false>(bvh, 0, ray, counters);
}

/// First hit found under the deterministic near-first order.
inline std::optional<HitRecord> intersect_any(const Bvh& bvh, const Ray& ray,
                                              TraversalCounters& counters) {
  return detail::traverse<true>(bvh, 0, ray, counters);
}

/// Traversal restricted to the subtree rooted at `start`, with hit-any or
/// closest-hit semantics taken from `ray.kind`.
inline std::optional<HitRecord> intersect_from_node(const Bvh& bvh, NodeIndex start, const Ray& ray,
                                                    TraversalCounters& counters) {
  if (start >= bvh.nodes.size())
    throw Error(ErrorKind::IndexOutOfRange, "node index " + std::to_string(start) + " out of range");
  return ray.kind == RayKind::HitAny ? detail::traverse<true>(bvh, start, ray, counters)
                                     : detail::traverse<false>(bvh, start, ray, counters);
}

/// Follows `go_up_level` parent links from `node`, stopping at the root.
inline NodeIndex ancestor_at(const Bvh& bvh, NodeIndex node, std::uint32_t go_up_level) {
  for (std::uint32_t i = 0; i < go_up_level; ++i) {
    const NodeIndex p = bvh.nodes[node].parent;
    if (p == kNoNode) break;
    node = p;
  }
  return node;
}

/// True if `node` lies in the subtree rooted at `ancestor` (inclusive).
inline bool in_subtree(const Bvh& bvh, NodeIndex node, NodeIndex ancestor) {
  while (node != kNoNode) {
    if (node == ancestor) return true;
    node = bvh.nodes[node].parent;
  }
  return false;
}

}  // namespace hrpp
