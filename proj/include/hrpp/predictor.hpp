// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hrpp/bvh.hpp"
#include "hrpp/error.hpp"
#include "hrpp/geom.hpp"
#include "hrpp/hash.hpp"

namespace hrpp {

/// Node references recorded under one key, in insertion order, without duplicates.
class PredictorEntry {
 public:
  bool insert(NodeIndex node) {
    if (contains(node)) return false;
    nodes_.push_back(node);
    return true;
  }
  bool contains(NodeIndex node) const { return std::find(nodes_.begin(), nodes_.end(), node) != nodes_.end(); }
  const std::vector<NodeIndex>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<NodeIndex> nodes_;
};

inline constexpr std::size_t kDefaultTableCapacity = std::size_t{1} << 26;

/// Unbounded (up to a safety cap) map from ray keys to predicted nodes. One
/// table serves one ray kind. Not internally synchronized: concurrent
/// lookups are fine, insertions need exclusive access.
class PredictorTable {
 public:
  struct Options {
    HashConfig hash{};
    std::uint32_t go_up_level = 0;
    RayKind kind = RayKind::ClosestHit;
    std::size_t capacity = kDefaultTableCapacity;
    std::size_t node_count = 0;  // nodes in the bound Bvh; 0 = unchecked
  };

  explicit PredictorTable(Options opts) : opts_(opts) { check(opts_.hash); }

  PredictorTable(HashConfig hash, std::uint32_t go_up_level, RayKind kind, const Bvh& bvh,
                 std::size_t capacity = kDefaultTableCapacity)
      : PredictorTable(Options{hash, go_up_level, kind, capacity, bvh.nodes.size()}) {}

  const HashConfig& hash_config() const { return opts_.hash; }
  std::uint32_t go_up_level() const { return opts_.go_up_level; }
  RayKind kind() const { return opts_.kind; }
  std::size_t capacity() const { return opts_.capacity; }

  std::size_t entry_count() const { return map_.size(); }
  std::size_t stored_node_count() const { return stored_nodes_; }

  const PredictorEntry* find(PredictorKey key) const {
    auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }

  bool insert(PredictorKey key, NodeIndex node) {
    if (opts_.node_count != 0 && node >= opts_.node_count)
      throw Error(ErrorKind::IndexOutOfRange, "node " + std::to_string(node) + " not in the bound BVH");
    auto it = map_.find(key);
    if (it == map_.end()) {
      if (map_.size() >= opts_.capacity)
        throw Error(ErrorKind::CapacityExceeded,
                    "predictor table reached " + std::to_string(opts_.capacity) + " entries");
      it = map_.emplace(key, PredictorEntry{}).first;
    }
    const bool grew = it->second.insert(node);
    stored_nodes_ += grew ? 1 : 0;
    return grew;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [key, entry] : map_) fn(key, entry);
  }

  std::vector<PredictorKey> sorted_keys() const {
    std::vector<PredictorKey> keys;
    keys.reserve(map_.size());
    for (const auto& kv : map_) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  void clear() {
    map_.clear();
    stored_nodes_ = 0;
  }

 private:
  Options opts_;
  std::unordered_map<PredictorKey, PredictorEntry, PredictorKeyHash> map_;
  std::size_t stored_nodes_ = 0;
};

enum class Prediction : std::uint8_t { TruePositive, FalsePositive, Negative };

inline const char* to_string(Prediction p) {
  switch (p) {
    case Prediction::TruePositive: return "TruePositive";
    case Prediction::FalsePositive: return "FalsePositive";
    case Prediction::Negative: return "Negative";
  }
  return "?";
}

struct PredictionOutcome {
  Prediction prediction = Prediction::Negative;
  PredictorKey key{};
  std::optional<HitRecord> hit;
  TraversalCounters overhead;
  std::uint64_t skipped_box_tests = 0;  // filled by callers that know the baseline cost
};

struct MemoryEstimate {
  std::uint64_t entry_bytes = 0;
  std::uint64_t node_ref_bytes = 0;
  std::uint64_t total_bytes = 0;
};

inline constexpr std::uint64_t kEntryBytes = 16;    // 6-byte key plus bookkeeping, rounded
inline constexpr std::uint64_t kNodeRefBytes = 4;   // 32-bit node index

inline const PredictorEntry* lookup(const PredictorTable& table, PredictorKey key) { return table.find(key); }

inline bool record(PredictorTable& table, PredictorKey key, NodeIndex node) { return table.insert(key, node); }

/// Looks the ray up and evaluates the predicted nodes in insertion order.
/// Hit-any tables stop at the first valid hit; closest-hit tables scan every
/// stored node and keep the minimal-t hit. Never mutates the table.
inline PredictionOutcome predict(const PredictorTable& table, const Bvh& bvh, const Ray& ray) {
  if (ray.kind != table.kind())
    throw Error(ErrorKind::InvalidArgument, "ray kind does not match predictor table kind");
  PredictionOutcome out;
  out.key = hash_ray(ray, table.hash_config());
  const PredictorEntry* entry = table.find(out.key);
  if (entry == nullptr) return out;

  Ray r = ray;
  for (NodeIndex node : entry->nodes()) {
    auto hit = intersect_from_node(bvh, node, r, out.overhead);
    if (!hit) continue;
    if (!out.hit || closer(*hit, *out.hit)) {
      out.hit = hit;
      r.t_max = hit->t;
    }
    if (ray.kind == RayKind::HitAny) break;
  }
  out.prediction = out.hit ? Prediction::TruePositive : Prediction::FalsePositive;
  return out;
}

/// Records the go-up-level ancestor of the leaf that produced `hit`.
inline bool train_from_traversal(PredictorTable& table, const Bvh& bvh, PredictorKey key, const HitRecord& hit) {
  return table.insert(key, ancestor_at(bvh, hit.leaf_node, table.go_up_level()));
}

inline MemoryEstimate memory_estimate(const PredictorTable& table) {
  MemoryEstimate m;
  m.entry_bytes = table.entry_count() * kEntryBytes;
  m.node_ref_bytes = table.stored_node_count() * kNodeRefBytes;
  m.total_bytes = m.entry_bytes + m.node_ref_bytes;
  return m;
}

/// Writes `key_hex -> [n,n,...]` lines sorted by key.
inline void dump_table(const PredictorTable& table, std::ostream& os) {
  for (PredictorKey key : table.sorted_keys()) {
    os << to_hex(key) << " -> [";
    const auto& nodes = table.find(key)->nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) os << (i ? "," : "") << nodes[i];
    os << "]\n";
  }
}

}  // namespace hrpp
