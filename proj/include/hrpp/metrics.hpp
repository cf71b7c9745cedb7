// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrpp/error.hpp"
#include "hrpp/predictor.hpp"

namespace hrpp {

/// Per-ray-kind tallies. `baseline_box_tests` counts interior-node box tests
/// of full traversals (the savings denominator); `baseline_total_box_tests`
/// also includes leaf boxes.
struct RayKindStats {
  std::uint64_t rays = 0;
  std::uint64_t consulted = 0;  // rays that went through the predictor
  std::uint64_t tp = 0, fp = 0, neg = 0;
  std::uint64_t hits = 0;  // rays whose final answer was a hit
  std::uint64_t baseline_box_tests = 0;
  std::uint64_t baseline_total_box_tests = 0;
  std::uint64_t baseline_tri_tests = 0;
  std::uint64_t overhead_box_tests = 0;  // interior box tests spent evaluating predictions
  std::uint64_t overhead_total_box_tests = 0;
  std::uint64_t overhead_tri_tests = 0;
  std::uint64_t skipped_box_tests = 0;            // exact, limit mode
  std::uint64_t estimated_skipped_box_tests = 0;  // lower bound, live mode
  std::uint64_t wrong_closest = 0;                // closest-hit TPs not matching the oracle

  RayKindStats& operator+=(const RayKindStats& o) {
    rays += o.rays;
    consulted += o.consulted;
    tp += o.tp;
    fp += o.fp;
    neg += o.neg;
    hits += o.hits;
    baseline_box_tests += o.baseline_box_tests;
    baseline_total_box_tests += o.baseline_total_box_tests;
    baseline_tri_tests += o.baseline_tri_tests;
    overhead_box_tests += o.overhead_box_tests;
    overhead_total_box_tests += o.overhead_total_box_tests;
    overhead_tri_tests += o.overhead_tri_tests;
    skipped_box_tests += o.skipped_box_tests;
    estimated_skipped_box_tests += o.estimated_skipped_box_tests;
    wrong_closest += o.wrong_closest;
    return *this;
  }
  friend RayKindStats operator+(RayKindStats a, const RayKindStats& b) { return a += b; }
  friend bool operator==(const RayKindStats&, const RayKindStats&) = default;
};

struct TableStats {
  std::uint64_t entries = 0;
  std::uint64_t stored_nodes = 0;
  double avg_nodes_per_entry = 0.0;
  std::uint64_t max_nodes_per_entry = 0;
  MemoryEstimate memory;
};

/// Gross savings: 100 * skipped / baseline interior box tests.
inline double savings_percent(const RayKindStats& s) {
  if (s.baseline_box_tests == 0) throw Error(ErrorKind::NoBaseline, "no baseline box tests recorded");
  return 100.0 * static_cast<double>(s.skipped_box_tests) / static_cast<double>(s.baseline_box_tests);
}

/// Skipped minus the interior box tests and triangle tests spent on prediction.
inline double net_savings_percent(const RayKindStats& s) {
  if (s.baseline_box_tests == 0) throw Error(ErrorKind::NoBaseline, "no baseline box tests recorded");
  const double net = static_cast<double>(s.skipped_box_tests) - static_cast<double>(s.overhead_box_tests) -
                     static_cast<double>(s.overhead_tri_tests);
  return 100.0 * net / static_cast<double>(s.baseline_box_tests);
}

/// Share of rays whose traversal was skipped entirely (true positives).
inline double rays_skipped_percent(const RayKindStats& s) {
  return s.rays == 0 ? 0.0 : 100.0 * static_cast<double>(s.tp) / static_cast<double>(s.rays);
}

inline double wrong_closest_rate(const RayKindStats& s) {
  return s.tp == 0 ? 0.0 : static_cast<double>(s.wrong_closest) / static_cast<double>(s.tp);
}

inline TableStats table_stats(const PredictorTable& table) {
  TableStats t;
  t.entries = table.entry_count();
  t.stored_nodes = table.stored_node_count();
  table.for_each([&](PredictorKey, const PredictorEntry& e) {
    t.max_nodes_per_entry = std::max<std::uint64_t>(t.max_nodes_per_entry, e.size());
  });
  t.avg_nodes_per_entry = t.entries ? static_cast<double>(t.stored_nodes) / static_cast<double>(t.entries) : 0.0;
  t.memory = memory_estimate(table);
  return t;
}

/// One report line: a (scene, mode, precision, go_up_level, spp, ray_kind)
/// combination with its counters and the stats of the table it consulted.
struct ReportRow {
  std::string scene;
  std::string mode;
  int precision = 0;
  std::uint32_t go_up_level = 0;
  std::uint32_t spp = 0;
  std::string ray_kind;
  std::string status = "ok";
  RayKindStats stats;
  TableStats table;
};

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "scene", "mode", "precision", "go_up_level", "spp", "ray_kind", "status",
      "rays", "consulted", "tp", "fp", "neg", "hits",
      "baseline_box_tests", "baseline_total_box_tests", "baseline_tri_tests",
      "overhead_box_tests", "overhead_total_box_tests", "overhead_tri_tests",
      "skipped_box_tests", "estimated_skipped_box_tests",
      "savings_percent", "net_savings_percent", "rays_skipped_percent",
      "wrong_closest", "wrong_closest_rate",
      "entries", "stored_nodes", "avg_nodes_per_entry", "max_nodes_per_entry",
      "table_entry_bytes", "table_node_ref_bytes", "table_bytes"};
  return cols;
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}
inline double savings_or_zero(const RayKindStats& s, double (*fn)(const RayKindStats&)) {
  return s.baseline_box_tests ? fn(s) : 0.0;
}
}  // namespace detail

inline void write_csv_header(std::ostream& os) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

inline void write_csv_row(std::ostream& os, const ReportRow& r) {
  using detail::fmt_double;
  const RayKindStats& s = r.stats;
  const std::vector<std::string> fields = {
      detail::csv_escape(r.scene), r.mode, std::to_string(r.precision), std::to_string(r.go_up_level),
      std::to_string(r.spp), r.ray_kind, detail::csv_escape(r.status),
      std::to_string(s.rays), std::to_string(s.consulted), std::to_string(s.tp), std::to_string(s.fp),
      std::to_string(s.neg), std::to_string(s.hits),
      std::to_string(s.baseline_box_tests), std::to_string(s.baseline_total_box_tests),
      std::to_string(s.baseline_tri_tests),
      std::to_string(s.overhead_box_tests), std::to_string(s.overhead_total_box_tests),
      std::to_string(s.overhead_tri_tests),
      std::to_string(s.skipped_box_tests), std::to_string(s.estimated_skipped_box_tests),
      fmt_double(detail::savings_or_zero(s, savings_percent)),
      fmt_double(detail::savings_or_zero(s, net_savings_percent)), fmt_double(rays_skipped_percent(s)),
      std::to_string(s.wrong_closest), fmt_double(wrong_closest_rate(s)),
      std::to_string(r.table.entries), std::to_string(r.table.stored_nodes),
      fmt_double(r.table.avg_nodes_per_entry), std::to_string(r.table.max_nodes_per_entry),
      std::to_string(r.table.memory.entry_bytes), std::to_string(r.table.memory.node_ref_bytes),
      std::to_string(r.table.memory.total_bytes)};
  for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
  os << '\n';
}

inline nlohmann::ordered_json to_json(const ReportRow& r) {
  const RayKindStats& s = r.stats;
  nlohmann::ordered_json j;
  j["scene"] = r.scene;
  j["mode"] = r.mode;
  j["precision"] = r.precision;
  j["go_up_level"] = r.go_up_level;
  j["spp"] = r.spp;
  j["ray_kind"] = r.ray_kind;
  j["status"] = r.status;
  j["rays"] = s.rays;
  j["consulted"] = s.consulted;
  j["tp"] = s.tp;
  j["fp"] = s.fp;
  j["neg"] = s.neg;
  j["hits"] = s.hits;
  j["baseline_box_tests"] = s.baseline_box_tests;
  j["baseline_total_box_tests"] = s.baseline_total_box_tests;
  j["baseline_tri_tests"] = s.baseline_tri_tests;
  j["overhead_box_tests"] = s.overhead_box_tests;
  j["overhead_total_box_tests"] = s.overhead_total_box_tests;
  j["overhead_tri_tests"] = s.overhead_tri_tests;
  j["skipped_box_tests"] = s.skipped_box_tests;
  j["estimated_skipped_box_tests"] = s.estimated_skipped_box_tests;
  j["savings_percent"] = detail::savings_or_zero(s, savings_percent);
  j["net_savings_percent"] = detail::savings_or_zero(s, net_savings_percent);
  j["rays_skipped_percent"] = rays_skipped_percent(s);
  j["wrong_closest"] = s.wrong_closest;
  j["wrong_closest_rate"] = wrong_closest_rate(s);
  j["entries"] = r.table.entries;
  j["stored_nodes"] = r.table.stored_nodes;
  j["avg_nodes_per_entry"] = r.table.avg_nodes_per_entry;
  j["max_nodes_per_entry"] = r.table.max_nodes_per_entry;
  j["table_entry_bytes"] = r.table.memory.entry_bytes;
  j["table_node_ref_bytes"] = r.table.memory.node_ref_bytes;
  j["table_bytes"] = r.table.memory.total_bytes;
  return j;
}

}  // namespace hrpp
