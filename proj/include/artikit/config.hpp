#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "artikit/types.hpp"

namespace artikit {

/// Pipeline hyperparameters. Defaults follow the reference configuration;
/// a JSON config file overrides values field by field.
struct Config {
  // Hand trajectory smoothing
  double length_scale = 10.0;  // OU reversion length scale, m (rate = 1/length_scale)
  double obs_noise = 0.05;     // observation noise std, m
  double process_noise = 0.01; // continuous-time diffusion magnitude, m s^-1/2
  double gate_p = 0.05;        // chi-square gate p-value, df = 3

  // Scene reconstruction & localization
  double voxel_size = 0.05;    // m
  int min_views = 4;           // confident voxel threshold (strict >)
  int n_local = 5;             // local interaction frames
  int n_global = 50;           // global views for geometry
  double depth_near = 0.1;     // frustum near plane, m
  double depth_far = 5.0;      // frustum far plane, m

  // Reasoning interface
  int k_frames = 10;           // vote slots for motion-type queries
  int n_cand = 4;              // presented axis candidates

  // Revolute axis fitting
  double torus_tol_ratio = 0.15;
  double torus_tol_min = 0.015;  // m
  double torus_tol_max = 0.050;  // m
  double max_radius = 1.0;       // m

  // Prismatic axis fitting
  double prism_tol = 0.02;       // m
  double min_inlier_rate = 0.3;

  // Scoring thresholds
  double axis_angle_thresh = 15.0;   // degrees
  double origin_dist_thresh = 0.25;  // m

  // 3D line lifting (tolerance defaults to voxel_size / 2)
  double line_fit_tol = 0.025;   // m
  int ransac_max_iters = 1000;
  double ransac_confidence = 0.999;
  int sample_stride_px = 2;
  double cluster_angle_tol = 5.0;  // degrees

  // Manhattan frame
  int kmeans_k = 6;
  double meanshift_bandwidth = 0.05;  // cosine distance (~18 degrees)
  double min_mode_angle = 45.0;       // degrees between accepted modes

  // Scene aggregation
  double scene_iou_thresh = 0.3;
  double mesh_dist_thresh = 0.25;  // m, trajectory-to-mesh grouping

  void validate() const {
    auto pos = [](double v, const char* name) {
      if (!(v > 0.0)) throw Error(std::string("invariant violation: config.") + name + " must be > 0");
    };
    pos(length_scale, "length_scale");
    pos(obs_noise, "obs_noise");
    pos(process_noise, "process_noise");
    pos(voxel_size, "voxel_size");
    pos(torus_tol_ratio, "torus_tol_ratio");
    pos(torus_tol_min, "torus_tol_min");
    pos(torus_tol_max, "torus_tol_max");
    pos(max_radius, "max_radius");
    pos(prism_tol, "prism_tol");
    pos(axis_angle_thresh, "axis_angle_thresh");
    pos(origin_dist_thresh, "origin_dist_thresh");
    pos(line_fit_tol, "line_fit_tol");
    if (!(gate_p > 0.0 && gate_p < 1.0)) throw Error("invariant violation: config.gate_p in (0,1)");
    if (min_views <= 0 || n_local <= 0 || n_global <= 0 || k_frames <= 0 || n_cand <= 0)
      throw Error("invariant violation: config counts must be > 0");
    if (torus_tol_min > torus_tol_max)
      throw Error("invariant violation: config.torus_tol_min <= torus_tol_max");
    if (!(min_inlier_rate > 0.0 && min_inlier_rate <= 1.0))
      throw Error("invariant violation: config.min_inlier_rate in (0,1]");
  }
};

inline Config default_config() { return Config{}; }

inline void apply_config_json(Config& cfg, const nlohmann::json& j) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("length_scale", cfg.length_scale);
  get("obs_noise", cfg.obs_noise);
  get("process_noise", cfg.process_noise);
  get("gate_p", cfg.gate_p);
  get("voxel_size", cfg.voxel_size);
  get("min_views", cfg.min_views);
  get("n_local", cfg.n_local);
  get("n_global", cfg.n_global);
  get("depth_near", cfg.depth_near);
  get("depth_far", cfg.depth_far);
  get("k_frames", cfg.k_frames);
  get("n_cand", cfg.n_cand);
  get("torus_tol_ratio", cfg.torus_tol_ratio);
  get("torus_tol_min", cfg.torus_tol_min);
  get("torus_tol_max", cfg.torus_tol_max);
  get("max_radius", cfg.max_radius);
  get("prism_tol", cfg.prism_tol);
  get("min_inlier_rate", cfg.min_inlier_rate);
  get("axis_angle_thresh", cfg.axis_angle_thresh);
  get("origin_dist_thresh", cfg.origin_dist_thresh);
  get("line_fit_tol", cfg.line_fit_tol);
  get("ransac_max_iters", cfg.ransac_max_iters);
  get("ransac_confidence", cfg.ransac_confidence);
  get("sample_stride_px", cfg.sample_stride_px);
  get("cluster_angle_tol", cfg.cluster_angle_tol);
  get("kmeans_k", cfg.kmeans_k);
  get("meanshift_bandwidth", cfg.meanshift_bandwidth);
  get("min_mode_angle", cfg.min_mode_angle);
  get("scene_iou_thresh", cfg.scene_iou_thresh);
  get("mesh_dist_thresh", cfg.mesh_dist_thresh);
  cfg.validate();
}

inline nlohmann::json config_to_json(const Config& c) {
  return nlohmann::json{{"length_scale", c.length_scale},
                        {"obs_noise", c.obs_noise},
                        {"process_noise", c.process_noise},
                        {"gate_p", c.gate_p},
                        {"voxel_size", c.voxel_size},
                        {"min_views", c.min_views},
                        {"n_local", c.n_local},
                        {"n_global", c.n_global},
                        {"depth_near", c.depth_near},
                        {"depth_far", c.depth_far},
                        {"k_frames", c.k_frames},
                        {"n_cand", c.n_cand},
                        {"torus_tol_ratio", c.torus_tol_ratio},
                        {"torus_tol_min", c.torus_tol_min},
                        {"torus_tol_max", c.torus_tol_max},
                        {"max_radius", c.max_radius},
                        {"prism_tol", c.prism_tol},
                        {"min_inlier_rate", c.min_inlier_rate},
                        {"axis_angle_thresh", c.axis_angle_thresh},
                        {"origin_dist_thresh", c.origin_dist_thresh},
                        {"line_fit_tol", c.line_fit_tol},
                        {"ransac_max_iters", c.ransac_max_iters},
                        {"ransac_confidence", c.ransac_confidence},
                        {"sample_stride_px", c.sample_stride_px},
                        {"cluster_angle_tol", c.cluster_angle_tol},
                        {"kmeans_k", c.kmeans_k},
                        {"meanshift_bandwidth", c.meanshift_bandwidth},
                        {"min_mode_angle", c.min_mode_angle},
                        {"scene_iou_thresh", c.scene_iou_thresh},
                        {"mesh_dist_thresh", c.mesh_dist_thresh}};
}

}  // namespace artikit
