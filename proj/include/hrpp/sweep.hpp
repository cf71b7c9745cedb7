// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ctime>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hrpp/bvh.hpp"
#include "hrpp/metrics.hpp"
#include "hrpp/predictor.hpp"
#include "hrpp/scene.hpp"
#include "hrpp/tracer.hpp"

namespace hrpp {

/// Everything that defines one render of a prepared scene.
struct RunConfig {
  RenderConfig render{};
  HashConfig hash{};
  std::uint32_t go_up_level = 0;
  std::size_t table_capacity = kDefaultTableCapacity;
};

struct RunResult {
  RenderOutput output;
  TableStats hit_any_table;
  TableStats closest_table;
};

struct TablePair {
  std::optional<PredictorTable> hit_any, closest;
};

/// Renders once with fresh predictor tables (none in baseline mode).
/// `keep_tables`, when given, receives the tables after the run.
inline RunResult run_once(const Scene& scene, const Bvh& bvh, const RunConfig& cfg, TablePair* keep_tables = nullptr) {
  TablePair tables;
  PredictorSet set;
  if (cfg.render.mode != RenderMode::Baseline) {
    tables.hit_any.emplace(cfg.hash, cfg.go_up_level, RayKind::HitAny, bvh, cfg.table_capacity);
    tables.closest.emplace(cfg.hash, cfg.go_up_level, RayKind::ClosestHit, bvh, cfg.table_capacity);
    set = {&*tables.hit_any, &*tables.closest};
  }
  RunResult r;
  r.output = render(scene, bvh, set, cfg.render);
  if (tables.hit_any) r.hit_any_table = table_stats(*tables.hit_any);
  if (tables.closest) r.closest_table = table_stats(*tables.closest);
  if (keep_tables) *keep_tables = std::move(tables);
  return r;
}

/// Report rows for one run: primary, reflection, hit_all (primary +
/// reflection, the closest-hit table) and hit_any (shadow rays).
inline std::vector<ReportRow> report_rows(const std::string& scene_name, const RunConfig& cfg, const RunResult& r) {
  ReportRow base;
  base.scene = scene_name;
  base.mode = to_string(cfg.render.mode);
  base.precision = cfg.hash.precision_bits;
  base.go_up_level = cfg.go_up_level;
  base.spp = cfg.render.spp;

  std::vector<ReportRow> rows;
  auto add = [&](const char* kind, const RayKindStats& s, const TableStats& t) {
    ReportRow row = base;
    row.ray_kind = kind;
    row.stats = s;
    row.table = t;
    rows.push_back(std::move(row));
  };
  add("primary", r.output.primary, r.closest_table);
  add("reflection", r.output.reflection, r.closest_table);
  add("hit_all", r.output.hit_all(), r.closest_table);
  add("hit_any", r.output.shadow, r.hit_any_table);
  return rows;
}

enum class SweepAxis : std::uint8_t { Precision, GoUpLevel, Spp };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Precision: return "precision";
    case SweepAxis::GoUpLevel: return "go_up_level";
    case SweepAxis::Spp: return "spp";
  }
  return "?";
}

struct SweepSpec {
  std::string scene_name;
  SweepAxis axis = SweepAxis::Precision;
  std::vector<std::int64_t> values;
  RunConfig fixed{};
};

inline RunConfig apply_axis(RunConfig cfg, SweepAxis axis, std::int64_t value) {
  switch (axis) {
    case SweepAxis::Precision:
      cfg.hash.precision_bits = static_cast<int>(value);
      check(cfg.hash);
      break;
    case SweepAxis::GoUpLevel:
      if (value < 0) throw Error(ErrorKind::InvalidArgument, "go_up_level must be >= 0");
      cfg.go_up_level = static_cast<std::uint32_t>(value);
      break;
    case SweepAxis::Spp:
      if (value < 1) throw Error(ErrorKind::InvalidArgument, "spp must be >= 1");
      cfg.render.spp = static_cast<std::uint32_t>(value);
      break;
  }
  return cfg;
}

struct SweepResult {
  std::vector<ReportRow> rows;
  std::size_t failed_runs = 0;
};

/// One run per value over a shared scene/BVH, each with fresh tables. A
/// failing run yields a single row whose status carries the error.
inline SweepResult run_sweep(const Scene& scene, const Bvh& bvh, const SweepSpec& spec) {
  if (spec.values.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one value");
  SweepResult result;
  for (std::int64_t v : spec.values) {
    RunConfig cfg = spec.fixed;
    try {
      cfg = apply_axis(cfg, spec.axis, v);
      const RunResult r = run_once(scene, bvh, cfg);
      for (auto& row : report_rows(spec.scene_name, cfg, r)) result.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      ++result.failed_runs;
      ReportRow row;
      row.scene = spec.scene_name;
      row.mode = to_string(cfg.render.mode);
      row.precision = cfg.hash.precision_bits;
      row.go_up_level = cfg.go_up_level;
      row.spp = cfg.render.spp;
      switch (spec.axis) {
        case SweepAxis::Precision: row.precision = static_cast<int>(v); break;
        case SweepAxis::GoUpLevel: row.go_up_level = static_cast<std::uint32_t>(v); break;
        case SweepAxis::Spp: row.spp = static_cast<std::uint32_t>(v); break;
      }
      row.ray_kind = "all";
      row.status = std::string("failed: ") + e.what();
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

/// CSV report. The optional first line `# generated <UTC time>` is the only
/// non-deterministic content.
inline void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows, bool timestamp) {
  if (timestamp) {
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# generated " << buf << '\n';
  }
  write_csv_header(os);
  for (const auto& row : rows) write_csv_row(os, row);
}

inline nlohmann::ordered_json report_json(const std::vector<ReportRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) arr.push_back(to_json(row));
  return arr;
}

}  // namespace hrpp
