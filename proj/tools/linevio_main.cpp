#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "linevio/est/pipeline.hpp"
#include "linevio/est/refinement.hpp"
#include "linevio/est/trajectory.hpp"
#include "linevio/sim/scenario.hpp"

namespace fs = std::filesystem;
using namespace linevio;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitBadPath = 2;

struct CommonOptions {
  std::string out_dir = ".";
  std::string scenario_path;
  uint64_t seed = 1;
  int n_lines = 80;
  int n_poses = 600;
  int n_points = 120;
  double noise_px = 0.0;
};

bool ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  if (fs::exists(dir, ec)) return fs::is_directory(dir, ec);
  return fs::create_directories(dir, ec);
}

Scenario obtain_scenario(const CommonOptions& opts) {
  if (!opts.scenario_path.empty()) {
    auto s = load_scenario(opts.scenario_path);
    if (!s) throw std::runtime_error("cannot load scenario: " + opts.scenario_path);
    return *s;
  }
  RoomSceneConfig cfg;
  cfg.n_lines = opts.n_lines;
  cfg.n_points = opts.n_points;
  return make_default_scenario(opts.seed, opts.noise_px, cfg, opts.n_poses);
}

int cmd_simulate(const CommonOptions& opts) {
  if (!ensure_out_dir(opts.out_dir)) {
    std::cerr << "error: cannot create output directory " << opts.out_dir << "\n";
    return kExitBadPath;
  }
  const Scenario s = obtain_scenario(opts);
  const auto obs = make_observations(s);
  const std::string scen_path = opts.out_dir + "/scenario.json";
  if (!save_scenario(s, scen_path) ||
      !write_observations_csv(obs, opts.out_dir + "/observations.csv") ||
      !write_point_observations_csv(obs,
                                    opts.out_dir + "/point_observations.csv")) {
    std::cerr << "error: failed to write outputs under " << opts.out_dir << "\n";
    return kExitBadPath;
  }
  std::printf("simulate: %zu lines, %zu poses, noise %.6g px -> %s\n",
              s.lines.size(), s.poses.size(), s.noise_sigma_px,
              scen_path.c_str());
  return 0;
}

int cmd_reconstruct(const CommonOptions& opts, std::vector<double> noise_levels,
                    const std::string& repr_arg, int repeats) {
  if (!ensure_out_dir(opts.out_dir)) {
    std::cerr << "error: cannot create output directory " << opts.out_dir << "\n";
    return kExitBadPath;
  }
  Scenario base = obtain_scenario(opts);
  if (noise_levels.empty()) noise_levels = {0.0, 0.5, 1.0, 1.5};

  std::vector<LineRepr> reprs;
  if (repr_arg == "ns2") {
    reprs = {LineRepr::NS2};
  } else if (repr_arg == "orth4") {
    reprs = {LineRepr::Orth4};
  } else {
    reprs = {LineRepr::NS2, LineRepr::Orth4};
  }

  std::ofstream csv(opts.out_dir + "/reconstruction.csv");
  if (!csv) {
    std::cerr << "error: cannot write report under " << opts.out_dir << "\n";
    return kExitBadPath;
  }
  csv << "repr,noise_px,rmse_cm,time_s\n";
  bool all_ok = true;
  for (const LineRepr repr : reprs) {
    const char* name = (repr == LineRepr::NS2) ? "ns2" : "orth4";
    for (const double noise : noise_levels) {
      Scenario s = base;
      s.noise_sigma_px = noise;
      const auto obs = make_observations(s);
      double best_time = 0.0;
      RefinementResult res;
      for (int rep = 0; rep < std::max(1, repeats); ++rep) {
        res = landmark_refinement(s, obs, repr);
        if (rep == 0 || res.report.wall_time < best_time) {
          best_time = res.report.wall_time;
        }
      }
      if (!res.report.ok) all_ok = false;
      if (res.failed_triangulation > 0) {
        std::fprintf(stderr, "reconstruct: %d lines failed triangulation at %s/%.2f\n",
                     res.failed_triangulation, name, noise);
      }
      const auto err = reconstruction_error(res.lines, s.lines);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%.6g\n", name, noise,
                    err.rmse_cm, best_time);
      csv << buf;
      std::printf("reconstruct: repr=%s noise=%.2f px rmse=%.6g cm time=%.3f s"
                  " (lines=%d skipped=%d)\n",
                  name, noise, err.rmse_cm, best_time, err.evaluated,
                  err.skipped);
    }
  }
  return all_ok ? 0 : kExitFailure;
}

int cmd_vio(const CommonOptions& opts, const VioConfig& config) {
  if (!ensure_out_dir(opts.out_dir)) {
    std::cerr << "error: cannot create output directory " << opts.out_dir << "\n";
    return kExitBadPath;
  }
  const Scenario s = obtain_scenario(opts);
  const VioResult res = sliding_window_run(s, config);
  if (!res.ok) {
    std::cerr << "error: estimator failed: " << res.message << "\n";
    return kExitFailure;
  }

  bool wrote = write_tum(res.trajectory, opts.out_dir + "/trajectory.tum");
  std::vector<TimedPose> gt = s.poses;
  wrote = wrote && write_tum(gt, opts.out_dir + "/groundtruth.tum");

  std::ofstream map_csv(opts.out_dir + "/line_map.csv");
  wrote = wrote && static_cast<bool>(map_csv);
  if (map_csv) {
    map_csv << "id,label,axis,sx,sy,sz,ex,ey,ez\n";
    char buf[256];
    for (const auto& rec : res.line_map) {
      std::snprintf(buf, sizeof(buf),
                    "%d,%s,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", rec.id,
                    rec.structural ? "S" : "N",
                    rec.structural ? axis_name(rec.axis) : "-", rec.seg.s.x(),
                    rec.seg.s.y(), rec.seg.s.z(), rec.seg.e.x(), rec.seg.e.y(),
                    rec.seg.e.z());
      map_csv << buf;
    }
  }

  const auto ape = evaluate_ape(res.trajectory, gt, false);
  std::ofstream summary(opts.out_dir + "/summary.txt");
  wrote = wrote && static_cast<bool>(summary) && ape.has_value();
  if (summary && ape) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "frames %d\nlandmarks %d\nmap_lines %zu\n"
                  "ape_trans_rmse_cm %.6g\nape_rot_rmse_deg %.6g\n",
                  res.solved_frames, res.created_landmarks,
                  res.line_map.size(), ape->trans_rmse_cm, ape->rot_rmse_deg);
    summary << buf;
    std::printf("vio: %zu poses, %zu map lines, APE trans %.6g cm rot %.6g deg\n",
                res.trajectory.size(), res.line_map.size(), ape->trans_rmse_cm,
                ape->rot_rmse_deg);
  }
  return wrote ? 0 : kExitFailure;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path,
             bool align) {
  const auto est = read_tum(est_path);
  const auto gt = read_tum(gt_path);
  if (!est || !gt) {
    std::cerr << "error: cannot parse trajectories\n";
    return kExitBadPath;
  }
  const auto ape = evaluate_ape(*est, *gt, align);
  if (!ape) {
    std::cerr << "error: no timestamp overlap between trajectories\n";
    return kExitFailure;
  }
  std::printf("ape_trans_rmse_cm %.6g\nape_rot_rmse_deg %.6g\nmatched %d\n",
              ape->trans_rmse_cm, ape->rot_rmse_deg, ape->matched_poses);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point/structural-line/non-structural-line visual estimation harness"};
  app.set_config("--config", "", "Read options from an INI-style config file");
  app.require_subcommand(1);

  CommonOptions common;

  auto add_common = [&common](CLI::App* sub, bool with_noise = true) {
    sub->add_option("--out", common.out_dir, "Output directory");
    sub->add_option("--seed", common.seed, "Deterministic seed");
    sub->add_option("--scenario", common.scenario_path,
                    "Load an existing scenario file instead of generating");
    sub->add_option("--lines", common.n_lines, "Number of 3D lines");
    sub->add_option("--poses", common.n_poses, "Number of trajectory poses");
    sub->add_option("--points", common.n_points, "Number of 3D points");
    if (with_noise) {
      sub->add_option("--noise", common.noise_px, "Endpoint noise sigma, pixels");
    }
  };

  CLI::App* sim = app.add_subcommand("simulate", "Generate the synthetic room scenario");
  add_common(sim);

  CLI::App* rec = app.add_subcommand(
      "reconstruct", "Landmark-only line reconstruction accuracy/time sweep");
  std::vector<double> noise_levels;
  std::string repr = "both";
  int repeats = 1;
  add_common(rec, false);
  rec->add_option("--noise", noise_levels, "Noise levels to sweep, pixels")
      ->delimiter(',');
  rec->add_option("--repr", repr, "Line representation: ns2, orth4 or both")
      ->check(CLI::IsMember({"ns2", "orth4", "both"}));
  rec->add_option("--repeats", repeats, "Timing repetitions per cell");

  CLI::App* vio = app.add_subcommand("vio", "Sliding-window estimator run");
  VioConfig vio_config;
  bool no_structural = false, no_nonstructural = false, no_points = false;
  std::string assoc = "raster";
  add_common(vio);
  vio->add_flag("--no-structural", no_structural, "Disable structural lines");
  vio->add_flag("--no-nonstructural", no_nonstructural,
                "Disable non-structural lines");
  vio->add_flag("--no-points", no_points, "Disable point features");
  vio->add_option("--assoc", assoc, "Line association: raster or ids")
      ->check(CLI::IsMember({"raster", "ids"}));
  vio->add_option("--window", vio_config.window_size, "Sliding window size");

  CLI::App* eval = app.add_subcommand("eval", "Absolute pose error of a trajectory");
  std::string est_path, gt_path;
  bool align = false;
  eval->add_option("--est", est_path, "Estimated trajectory (TUM)")->required();
  eval->add_option("--gt", gt_path, "Ground-truth trajectory (TUM)")->required();
  eval->add_flag("--align", align, "Rigidly align before computing APE");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(common);
    if (rec->parsed()) return cmd_reconstruct(common, noise_levels, repr, repeats);
    if (vio->parsed()) {
      vio_config.use_s_lines = !no_structural;
      vio_config.use_ns_lines = !no_nonstructural;
      vio_config.use_points = !no_points;
      vio_config.association = (assoc == "ids")
                                   ? VioConfig::Association::GroundTruthIds
                                   : VioConfig::Association::Raster;
      vio_config.seed = common.seed;
      return cmd_vio(common, vio_config);
    }
    if (eval->parsed()) return cmd_eval(est_path, gt_path, align);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
