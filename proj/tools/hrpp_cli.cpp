// SPDX-License-Identifier: Apache-2.0
//
// hrpp: render, sweep and inspect scenes through an instrumented BVH with
// hash-based ray path prediction.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hrpp/hrpp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitNotFound = 2;

struct CommonFlags {
  std::string scene_path;
  std::string mode = "limit";
  int precision = 6;
  std::uint32_t go_up = 0;
  std::uint32_t spp = 8;
  std::string resolution = "256";
  std::uint64_t seed = 0;
  std::uint32_t max_depth = 2;
  std::string sampling = "jittered";
  std::uint32_t threads = 1;
  std::uint32_t leaf_size = 4;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool with_mode) {
  cmd->add_option("scene", f.scene_path, "Scene description (JSON)")->required();
  if (with_mode)
    cmd->add_option("--mode", f.mode, "baseline | limit | live")
        ->check(CLI::IsMember({"baseline", "limit", "live"}))
        ->capture_default_str();
  cmd->add_option("--precision", f.precision, "Hash precision bits (1-7)")
      ->check(CLI::Range(1, 7))
      ->capture_default_str();
  cmd->add_option("--go-up", f.go_up, "Go-up level (0 = predict leaves)")->capture_default_str();
  cmd->add_option("--spp", f.spp, "Samples per pixel")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--resolution", f.resolution, "N, WxH, or 'scene' for the scene file's camera")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--max-depth", f.max_depth, "Maximum mirror reflection depth")->capture_default_str();
  cmd->add_option("--sampling", f.sampling, "jittered | stratum-center | pixel-center")
      ->check(CLI::IsMember({"jittered", "stratum-center", "pixel-center"}))
      ->capture_default_str();
  cmd->add_option("--threads", f.threads, "Worker threads (1 = deterministic)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--leaf-size", f.leaf_size, "BVH max leaf size")->check(CLI::PositiveNumber)->capture_default_str();
}

std::size_t table_capacity_from_env() {
  if (const char* env = std::getenv("HRPP_MAX_TABLE_ENTRIES")) {
    try {
      const unsigned long long v = std::stoull(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    hrpp::log_warning(std::string("ignoring invalid HRPP_MAX_TABLE_ENTRIES='") + env + "'");
  }
  return hrpp::kDefaultTableCapacity;
}

void apply_resolution(const std::string& spec, hrpp::Camera& cam) {
  if (spec == "scene") return;
  std::uint32_t w = 0, h = 0;
  char x = 0;
  std::istringstream in(spec);
  if (spec.find('x') != std::string::npos) {
    in >> w >> x >> h;
  } else {
    in >> w;
    h = w;
  }
  if (!in || w == 0 || h == 0)
    throw hrpp::Error(hrpp::ErrorKind::InvalidArgument, "bad --resolution '" + spec + "'");
  cam.width = w;
  cam.height = h;
}

hrpp::RenderMode parse_mode(const std::string& m) {
  if (m == "baseline") return hrpp::RenderMode::Baseline;
  if (m == "live") return hrpp::RenderMode::Live;
  return hrpp::RenderMode::Limit;
}

hrpp::PixelSampling parse_sampling(const std::string& s) {
  if (s == "stratum-center") return hrpp::PixelSampling::StratumCenter;
  if (s == "pixel-center") return hrpp::PixelSampling::PixelCenter;
  return hrpp::PixelSampling::Jittered;
}

hrpp::RunConfig run_config(const CommonFlags& f) {
  hrpp::RunConfig cfg;
  cfg.render.mode = parse_mode(f.mode);
  cfg.render.spp = f.spp;
  cfg.render.rng_seed = f.seed;
  cfg.render.max_reflection_depth = f.max_depth;
  cfg.render.sampling = parse_sampling(f.sampling);
  cfg.render.threads = f.threads;
  cfg.hash.precision_bits = f.precision;
  cfg.go_up_level = f.go_up;
  cfg.table_capacity = table_capacity_from_env();
  return cfg;
}

struct Prepared {
  hrpp::Scene scene;
  hrpp::Bvh bvh;
};

Prepared prepare(const CommonFlags& f) {
  Prepared p{hrpp::load_scene(f.scene_path), {}};
  apply_resolution(f.resolution, p.scene.camera);
  p.bvh = hrpp::build_bvh(p.scene.triangles, f.leaf_size);
  return p;
}

nlohmann::ordered_json config_json(const CommonFlags& f, const hrpp::Camera& cam) {
  nlohmann::ordered_json j;
  j["mode"] = f.mode;
  j["precision"] = f.precision;
  j["go_up_level"] = f.go_up;
  j["spp"] = f.spp;
  j["resolution"] = {cam.width, cam.height};
  j["seed"] = f.seed;
  j["max_reflection_depth"] = f.max_depth;
  j["sampling"] = f.sampling;
  j["threads"] = f.threads;
  j["leaf_size"] = f.leaf_size;
  return j;
}

int cmd_render(const CommonFlags& f, const std::string& image_path, const std::string& stats_path, bool verify) {
  Prepared p = prepare(f);
  const hrpp::RunConfig cfg = run_config(f);
  const hrpp::RunResult result = hrpp::run_once(p.scene, p.bvh, cfg);

  hrpp::write_ppm(std::filesystem::path(image_path), result.output);
  const auto rows = hrpp::report_rows(p.scene.name, cfg, result);

  bool verified = true;
  if (verify && cfg.render.mode == hrpp::RenderMode::Limit) {
    hrpp::RunConfig base = cfg;
    base.render.mode = hrpp::RenderMode::Baseline;
    const auto baseline = hrpp::run_once(p.scene, p.bvh, base);
    verified = hrpp::to_rgb8(baseline.output) == hrpp::to_rgb8(result.output);
    std::cerr << (verified ? "verify: limit image matches baseline\n" : "verify: limit image DIFFERS from baseline\n");
  } else if (verify) {
    std::cerr << "verify: only meaningful in limit mode; skipped\n";
  }

  nlohmann::ordered_json stats;
  stats["scene"] = p.scene.name;
  stats["triangles"] = p.scene.triangles.size();
  stats["bvh_nodes"] = p.bvh.nodes.size();
  stats["max_bvh_depth"] = p.bvh.max_depth;
  stats["config"] = config_json(f, p.scene.camera);
  stats["image"] = image_path;
  if (verify) stats["verified"] = verified;
  stats["rows"] = hrpp::report_json(rows);
  const std::string text = stats.dump(2) + "\n";
  if (!stats_path.empty()) {
    std::ofstream out(stats_path);
    if (!out) throw hrpp::Error(hrpp::ErrorKind::IoError, "cannot write " + stats_path);
    out << text;
  } else {
    std::cout << text;
  }
  return verified ? kExitOk : kExitFailure;
}

std::vector<std::int64_t> parse_values(const std::string& csv) {
  std::vector<std::int64_t> values;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    if (auto dash = tok.find("..", 0); dash != std::string::npos) {
      const std::int64_t lo = std::stoll(tok.substr(0, dash)), hi = std::stoll(tok.substr(dash + 2));
      for (std::int64_t v = lo; v <= hi; ++v) values.push_back(v);
    } else {
      values.push_back(std::stoll(tok));
    }
  }
  if (values.empty()) throw hrpp::Error(hrpp::ErrorKind::InvalidArgument, "--values is empty");
  return values;
}

int cmd_sweep(const CommonFlags& f, const std::string& axis, const std::string& values, const std::string& csv_path,
              const std::string& json_path, bool timestamp) {
  Prepared p = prepare(f);
  hrpp::SweepSpec spec;
  spec.scene_name = p.scene.name;
  spec.axis = axis == "precision"  ? hrpp::SweepAxis::Precision
              : axis == "go-up"    ? hrpp::SweepAxis::GoUpLevel
                                   : hrpp::SweepAxis::Spp;
  try {
    spec.values = parse_values(values);
  } catch (const std::logic_error&) {
    throw hrpp::Error(hrpp::ErrorKind::InvalidArgument, "bad --values '" + values + "'");
  }
  spec.fixed = run_config(f);

  const hrpp::SweepResult result = hrpp::run_sweep(p.scene, p.bvh, spec);
  if (csv_path.empty() || csv_path == "-") {
    hrpp::write_report_csv(std::cout, result.rows, timestamp);
  } else {
    std::ofstream out(csv_path);
    if (!out) throw hrpp::Error(hrpp::ErrorKind::IoError, "cannot write " + csv_path);
    hrpp::write_report_csv(out, result.rows, timestamp);
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw hrpp::Error(hrpp::ErrorKind::IoError, "cannot write " + json_path);
    out << hrpp::report_json(result.rows).dump(2) << '\n';
  }
  if (result.failed_runs > 0) std::cerr << result.failed_runs << " sweep run(s) failed\n";
  return result.failed_runs == 0 ? kExitOk : kExitFailure;
}

int cmd_dump_table(const CommonFlags& f, const std::string& kind, const std::string& out_path) {
  Prepared p = prepare(f);
  hrpp::RunConfig cfg = run_config(f);
  if (cfg.render.mode == hrpp::RenderMode::Baseline) cfg.render.mode = hrpp::RenderMode::Limit;
  hrpp::TablePair tables;
  hrpp::run_once(p.scene, p.bvh, cfg, &tables);
  const hrpp::PredictorTable& table = kind == "hit-any" ? *tables.hit_any : *tables.closest;
  if (out_path.empty() || out_path == "-") {
    hrpp::dump_table(table, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw hrpp::Error(hrpp::ErrorKind::IoError, "cannot write " + out_path);
    hrpp::dump_table(table, out);
  }
  return kExitOk;
}

int cmd_scene_info(const CommonFlags& f) {
  const hrpp::Scene scene = hrpp::load_scene(f.scene_path);
  const hrpp::Bvh bvh = hrpp::build_bvh(scene.triangles, f.leaf_size);
  std::cout << "scene:            " << scene.name << '\n'
            << "triangles:        " << scene.triangles.size() << '\n'
            << "degenerate drop:  " << scene.degenerate_dropped << '\n'
            << "lights:           " << scene.lights.size() << '\n'
            << "bvh nodes:        " << bvh.nodes.size() << '\n'
            << "bvh leaves:       " << bvh.leaf_count() << '\n'
            << "max BVH depth:    " << bvh.max_depth << '\n'
            << "oversized leaves: " << bvh.oversized_leaves << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hash-based ray path prediction workbench"};
  app.require_subcommand(1);

  CommonFlags render_flags, sweep_flags, dump_flags, info_flags;
  std::string image_path = "render.ppm", stats_path;
  bool verify = false;
  auto* render = app.add_subcommand("render", "Render one configuration");
  add_common_flags(render, render_flags, true);
  render->add_option("--out", image_path, "Output image (binary PPM)")->capture_default_str();
  render->add_option("--stats", stats_path, "Stats JSON path (default: stdout)");
  render->add_flag("--verify", verify, "Limit mode: check the image equals a baseline render");

  std::string axis, values, csv_path, json_path;
  bool no_timestamp = false;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and emit a CSV report");
  add_common_flags(sweep, sweep_flags, true);
  sweep->add_option("--axis", axis, "precision | go-up | spp")
      ->required()
      ->check(CLI::IsMember({"precision", "go-up", "spp"}));
  sweep->add_option("--values", values, "Comma list, ranges as a..b (e.g. 1..7)")->required();
  sweep->add_option("--out", csv_path, "CSV path (default: stdout)");
  sweep->add_option("--json", json_path, "Also write the rows as JSON");
  sweep->add_flag("--no-timestamp", no_timestamp, "Omit the '# generated' header line");

  std::string kind = "closest", dump_path;
  auto* dump = app.add_subcommand("dump-table", "Render in limit mode and print a predictor table");
  add_common_flags(dump, dump_flags, true);
  dump->add_option("--kind", kind, "closest | hit-any")
      ->check(CLI::IsMember({"closest", "hit-any"}))
      ->capture_default_str();
  dump->add_option("--out", dump_path, "Output path (default: stdout)");

  auto* info = app.add_subcommand("scene-info", "Print triangle count and BVH depth");
  info->add_option("scene", info_flags.scene_path, "Scene description (JSON)")->required();
  info->add_option("--leaf-size", info_flags.leaf_size, "BVH max leaf size")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*render) return cmd_render(render_flags, image_path, stats_path, verify);
    if (*sweep) return cmd_sweep(sweep_flags, axis, values, csv_path, json_path, !no_timestamp);
    if (*dump) return cmd_dump_table(dump_flags, kind, dump_path);
    if (*info) return cmd_scene_info(info_flags);
  } catch (const hrpp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == hrpp::ErrorKind::FileNotFound ? kExitNotFound : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
