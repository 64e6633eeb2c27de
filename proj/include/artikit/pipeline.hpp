#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "artikit/bundle.hpp"
#include "artikit/config.hpp"
#include "artikit/eval.hpp"
#include "artikit/infer.hpp"
#include "artikit/lines3d.hpp"
#include "artikit/localize.hpp"
#include "artikit/manhattan.hpp"
#include "artikit/reason.hpp"
#include "artikit/rng.hpp"
#include "artikit/serialize.hpp"
#include "artikit/trajectory.hpp"

namespace artikit::pipeline {

inline std::uint64_t clip_seed(std::uint64_t run_seed, const std::string& clip_id) {
  return derive_seed(run_seed, clip_id);
}

struct ViewSelection {
  std::vector<int> local_frames;
  loc::ConfidentRegion region;
  std::vector<int> selected_views;  // frame indices
};

/// Localization stage: cloud (provided or derived from depth), optional
/// mask filtering, voxel counts over the local interaction frames,
/// confident region, frustum filtering, farthest point sampling.
inline ViewSelection stage_localize(const ClipBundle& b, const Config& cfg,
                                    const std::optional<PointCloud>& external_cloud,
                                    const std::vector<int>& local_override,
                                    std::vector<std::string>* warnings = nullptr) {
  ViewSelection out;
  out.local_frames = local_override.empty() ? loc::select_local_frames(b, cfg) : local_override;

  PointCloud cloud = external_cloud ? *external_cloud
                     : b.cloud      ? *b.cloud
                                    : loc::cloud_from_depth(b);
  if (cloud.points.empty()) throw Error("stage_localize: empty point cloud");
  cloud = loc::mask_filter_cloud(cloud, b);  // filter first when masks exist
  const PointCloud local_cloud = loc::restrict_to_frames(cloud, out.local_frames);

  if (!local_cloud.points.empty()) {
    const loc::VoxelGrid grid = loc::build_voxel_grid(local_cloud, cfg);
    out.region = loc::extract_confident(grid, cfg);
  }

  std::vector<int> candidates;
  if (!out.region.empty()) {
    candidates = loc::frustum_filter(b.poses, b.intrinsics, out.region,
                                     {cfg.depth_near, cfg.depth_far});
  }
  if (candidates.empty()) {
    if (warnings) warnings->push_back("empty confident region; falling back to all frames");
    for (size_t i = 0; i < b.poses.size(); ++i) candidates.push_back(static_cast<int>(i));
  }
  const std::vector<int> positions = loc::select_views_fps(candidates, b.poses, cfg.n_global);
  for (const int p : positions) out.selected_views.push_back(b.frames[p].index);
  return out;
}

struct LineArtifacts {
  std::vector<Line3D> fitted;               // one per merged track
  std::vector<std::vector<int>> clusters;   // direction clusters over fitted
  std::vector<Line3D> candidates;           // consolidated per-cluster lines
};

/// Line lifting stage over the selected views: unproject, merge by
/// correspondence, robust-fit, cluster directions, consolidate.
inline LineArtifacts stage_lines(const ClipBundle& b, const std::vector<int>& selected_views,
                                 const Config& cfg, std::uint64_t seed,
                                 std::vector<std::string>* warnings = nullptr) {
  LineArtifacts out;
  std::set<int> view_set(selected_views.begin(), selected_views.end());
  std::vector<LineSegment2D> segs;
  std::vector<lines::PointTrack> per_seg;
  for (const auto& s : b.lines) {
    if (!view_set.count(s.frame)) continue;
    const auto dit = b.depth.find(s.frame);
    if (dit == b.depth.end()) continue;
    try {
      per_seg.push_back(lines::unproject_line_samples(s, dit->second, b.intrinsics, b.pose_of(s.frame),
                                                      cfg.sample_stride_px));
      segs.push_back(s);
    } catch (const Error&) {
      // segment without usable depth support
    }
  }
  if (segs.empty()) {
    if (warnings) warnings->push_back("no usable 2D line segments in selected views");
    return out;
  }
  const auto tracks = lines::merge_tracks_by_correspondence(segs, per_seg, warnings);
  std::vector<lines::PointTrack> fit_tracks;  // aligned with out.fitted
  for (size_t i = 0; i < tracks.size(); ++i) {
    try {
      out.fitted.push_back(lines::fit_line_lo_ransac(tracks[i], cfg.line_fit_tol, cfg.ransac_max_iters,
                                                     derive_seed(seed, "track" + std::to_string(i))));
      fit_tracks.push_back(tracks[i]);
    } catch (const Error&) {
      if (warnings) warnings->push_back("track " + std::to_string(i) + ": degenerate line fit skipped");
    }
  }
  if (out.fitted.empty()) return out;

  out.clusters = lines::cluster_directions(out.fitted, cfg.cluster_angle_tol);
  out.candidates =
      lines::consolidate_candidates(out.fitted, fit_tracks, out.clusters, cfg, derive_seed(seed, "cands"));
  return out;
}

/// Manhattan stage over one or more bundles (scene scope pools all).
inline manhattan::ManhattanFrame stage_manhattan(std::span<const ClipBundle*> bundles,
                                                 std::span<const std::vector<int>> selected_views,
                                                 const Config& cfg, std::uint64_t seed) {
  std::vector<manhattan::Triad> triads;
  std::vector<CameraPose> triad_poses;
  for (size_t bi = 0; bi < bundles.size(); ++bi) {
    const ClipBundle& b = *bundles[bi];
    for (const int fid : selected_views[bi]) {
      std::vector<NormalSample> frame_samples;
      for (const auto& s : b.normals)
        if (s.frame == fid) frame_samples.push_back(s);
      if (static_cast<int>(frame_samples.size()) < std::max(cfg.kmeans_k, 3)) continue;
      try {
        const auto centroids = manhattan::cluster_normals(
            frame_samples, cfg.kmeans_k, derive_seed(seed, b.clip_id + "/kmeans" + std::to_string(fid)));
        if (centroids.size() < 3) continue;
        triads.push_back(manhattan::frame_from_clusters(centroids));
        triad_poses.push_back(b.pose_of(fid));
      } catch (const Error&) {
        continue;
      }
    }
  }
  if (triads.empty()) throw Error("degenerate Manhattan structure");
  return manhattan::aggregate_manhattan(triads, triad_poses, cfg);
}

struct ReasonOutcome {
  infer::ResolvedMotion motion;
  std::vector<int> presented;        // candidate ids presented (into LineArtifacts.candidates)
  std::vector<Line3D> survivors;     // candidates surviving the reasoner's axis choice
  int candidate_view = -1;           // view used for mask filtering / prompts
};

/// Reasoning stage: mask filtering in the best-mask view, top-N candidate
/// selection, motion type from injected votes (preferred) or the geometric
/// heuristic, axis subset from the injected choice when present.
inline ReasonOutcome stage_reason(const ClipBundle& b, const traj::SmoothedTrajectory& smoothed,
                                  const LineArtifacts& lines_art,
                                  const std::optional<reason::InjectionRecord>& injected,
                                  const std::vector<int>& selected_views, const Config& cfg,
                                  std::vector<std::string>* warnings = nullptr) {
  ReasonOutcome out;

  // Candidate filtering in the selected view with the largest mask area.
  std::vector<int> filtered(lines_art.candidates.size());
  for (size_t i = 0; i < filtered.size(); ++i) filtered[i] = static_cast<int>(i);
  if (!b.masks.empty()) {
    int best_view = -1;
    long best_area = -1;
    for (const int fid : selected_views) {
      const auto it = b.masks.find(fid);
      if (it == b.masks.end()) continue;
      long area = 0;
      for (const auto v : it->second.values) area += v ? 1 : 0;
      if (area > best_area) {
        best_area = area;
        best_view = fid;
      }
    }
    if (best_view >= 0) {
      out.candidate_view = best_view;
      filtered = reason::filter_candidates_by_mask(lines_art.candidates, b.masks.at(best_view),
                                                   b.intrinsics, b.pose_of(best_view), warnings);
    }
  } else if (!selected_views.empty()) {
    out.candidate_view = selected_views.front();
  }

  std::vector<Line3D> filtered_lines;
  for (const int i : filtered) filtered_lines.push_back(lines_art.candidates[i]);
  const std::vector<int> top = reason::select_top_candidates(filtered_lines, cfg.n_cand);
  for (const int i : top) out.presented.push_back(filtered[i]);

  // Motion type: injection wins, heuristic otherwise.
  reason::VoteLabel label = reason::VoteLabel::unknown;
  if (injected && !injected->votes.empty()) {
    label = reason::aggregate_votes(injected->votes);
    out.motion.provenance = "injected";
  } else {
    try {
      label = reason::heuristic_motion_type(smoothed, cfg);
    } catch (const Error&) {
      label = reason::VoteLabel::unknown;
    }
    out.motion.provenance = "heuristic";
  }
  out.motion.type = reason::to_motion_type(label);

  // Axis subset.
  if (injected && injected->axis_choice) {
    for (const int k : *injected->axis_choice) {
      if (k < 0 || k >= static_cast<int>(out.presented.size()))
        throw Error("reasoner axis_choice index out of range");
      out.survivors.push_back(lines_art.candidates[out.presented[k]]);
    }
  } else {
    for (const int i : out.presented) out.survivors.push_back(lines_art.candidates[i]);
  }
  return out;
}

/// Prompt payload for an external reasoner: the uniformly sampled vote
/// frames and, per presented candidate, the projected 2D endpoints in the
/// candidate view (rendering Set-of-Marks overlays is a downstream concern).
inline nlohmann::json make_prompts_json(const ClipBundle& b, const traj::SmoothedTrajectory& smoothed,
                                        const LineArtifacts& lines_art, const ViewSelection& views,
                                        const Config& cfg, std::vector<std::string>* warnings = nullptr) {
  const ReasonOutcome reasoned =
      stage_reason(b, smoothed, lines_art, std::nullopt, views.selected_views, cfg, warnings);

  nlohmann::json j;
  j["clip_id"] = b.clip_id;
  nlohmann::json vote_frames = nlohmann::json::array();
  const int n = static_cast<int>(b.frames.size());
  for (int i = 0; i < cfg.k_frames; ++i) {
    const int k = n <= 1 ? 0 : static_cast<int>((static_cast<long>(n - 1) * i) / std::max(1, cfg.k_frames - 1));
    vote_frames.push_back(b.frames[k].index);
  }
  j["vote_frames"] = vote_frames;
  j["candidate_view"] = reasoned.candidate_view;

  nlohmann::json cands = nlohmann::json::array();
  for (size_t slot = 0; slot < reasoned.presented.size(); ++slot) {
    const Line3D& l = lines_art.candidates[reasoned.presented[slot]];
    nlohmann::json rec;
    rec["slot"] = slot;
    rec["candidate_id"] = reasoned.presented[slot];
    rec["line"] = ser::line_to_json(l);
    if (reasoned.candidate_view >= 0) {
      const CameraPose& pose = b.pose_of(reasoned.candidate_view);
      const Vec3 a = l.origin - 0.5 * l.projected_length * l.direction;
      const Vec3 c = l.origin + 0.5 * l.projected_length * l.direction;
      const Vec3 a_cam = pose.to_camera(a);
      const Vec3 c_cam = pose.to_camera(c);
      if (a_cam.z() > 0.0 && c_cam.z() > 0.0) {
        const Vec2 pa = b.intrinsics.project(a_cam);
        const Vec2 pc = b.intrinsics.project(c_cam);
        rec["endpoints_2d"] = {nlohmann::json::array({pa.x(), pa.y()}),
                               nlohmann::json::array({pc.x(), pc.y()})};
      }
    }
    cands.push_back(rec);
  }
  j["candidates"] = cands;
  return j;
}

struct ClipResult {
  std::string clip_id;
  std::string scene_id;
  std::string status = "ok";  // ok | rejected:<reason> | error:<reason>
  std::vector<std::string> warnings;
  std::optional<traj::SmoothedTrajectory> smoothed;
  std::optional<ViewSelection> views;
  std::optional<LineArtifacts> lines_art;
  std::optional<manhattan::ManhattanFrame> frame;
  std::optional<infer::ClipEstimate> estimate;
  std::string reject_reason;
};

/// Full per-clip pipeline: smooth, localize, lines, manhattan, reason,
/// infer. Rejections annotate the result; hard errors propagate as status.
inline ClipResult run_clip(const ClipBundle& b, const Config& cfg, std::uint64_t run_seed,
                           const std::optional<reason::InjectionRecord>& injected) {
  ClipResult r;
  r.clip_id = b.clip_id;
  r.scene_id = b.scene_id;
  const std::uint64_t seed = clip_seed(run_seed, b.clip_id);
  try {
    r.smoothed = traj::smooth_clip(b.fingertips, cfg);

    const std::vector<int> local_override = injected ? injected->local_frames : std::vector<int>{};
    r.views = stage_localize(b, cfg, std::nullopt, local_override, &r.warnings);

    r.lines_art = stage_lines(b, r.views->selected_views, cfg, derive_seed(seed, "lines"), &r.warnings);

    try {
      const ClipBundle* bp = &b;
      const std::vector<int>& sv = r.views->selected_views;
      r.frame = stage_manhattan(std::span<const ClipBundle*>(&bp, 1),
                                std::span<const std::vector<int>>(&sv, 1), cfg,
                                derive_seed(seed, "manhattan"));
    } catch (const Error& e) {
      r.warnings.push_back(std::string("manhattan: ") + e.what());
    }

    const ReasonOutcome reasoned =
        stage_reason(b, *r.smoothed, *r.lines_art, injected, r.views->selected_views, cfg, &r.warnings);

    infer::InferInputs in{*r.smoothed, r.frame, reasoned.survivors, reasoned.motion};
    r.estimate = infer::infer_clip(b.clip_id, in, cfg);
    r.estimate->scene_id = b.scene_id;
  } catch (const Rejection& e) {
    r.status = std::string("rejected:") + e.what();
    r.reject_reason = e.what();
  } catch (const Error& e) {
    r.status = std::string("error:") + e.what();
  } catch (const std::exception& e) {
    r.status = std::string("error:") + e.what();
  }
  return r;
}

struct RunOptions {
  fs::path out_dir;
  std::uint64_t seed = 17;
  int jobs = 1;
  bool dry_run = false;
  bool plot = false;
  bool micro = false;
  std::optional<fs::path> reasoner_path;
  std::optional<fs::path> gt_path;
  std::optional<Config> config;
};

struct RunManifest {
  nlohmann::json json_doc;
  bool any_error = false;
};

inline std::vector<fs::path> find_bundle_dirs(const fs::path& dataset) {
  std::vector<fs::path> out;
  if (fs::exists(dataset / "manifest.json")) {
    out.push_back(dataset);
    return out;
  }
  const fs::path clips = fs::exists(dataset / "clips") ? dataset / "clips" : dataset;
  if (!fs::exists(clips)) throw Error("missing file: " + clips.string());
  for (const auto& entry : fs::directory_iterator(clips))
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error("missing file: no clip bundles under " + dataset.string());
  return out;
}

inline void write_plot_files(const fs::path& dir, const ClipResult& r) {
  if (!r.smoothed) return;
  nlohmann::json j;
  nlohmann::json poly = nlohmann::json::array();
  for (const auto& p : r.smoothed->positions) poly.push_back(io::vec3_to_json(p));
  j["trajectory"] = poly;
  if (r.estimate) {
    j["axis"] = {{"origin", io::vec3_to_json(r.estimate->articulation.origin)},
                 {"direction", io::vec3_to_json(r.estimate->articulation.axis)}};
  }
  io::write_json_file(dir / "plot.json", j);

  std::ofstream obj(dir / "plot.obj");
  for (const auto& p : r.smoothed->positions)
    obj << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
  if (r.estimate) {
    const Vec3 o = r.estimate->articulation.origin;
    const Vec3 a = r.estimate->articulation.axis;
    obj << "v " << (o - 0.5 * a).transpose() << "\n";
    obj << "v " << (o + 0.5 * a).transpose() << "\n";
  }
  obj << "l";
  for (size_t i = 1; i <= r.smoothed->positions.size(); ++i) obj << " " << i;
  obj << "\n";
  if (r.estimate) {
    const size_t base = r.smoothed->positions.size();
    obj << "l " << base + 1 << " " << base + 2 << "\n";
  }
}

/// Executes the full pipeline over a dataset directory (or a single
/// bundle). Clip-level parallelism is bounded by jobs; outputs are written
/// in clip order so results are byte-identical at any jobs setting.
inline RunManifest run_pipeline(const fs::path& dataset, const RunOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  const Config cfg = opt.config.value_or(default_config());
  cfg.validate();

  const std::vector<fs::path> bundle_dirs = find_bundle_dirs(dataset);

  std::map<std::string, reason::InjectionRecord> injections;
  fs::path reasoner = opt.reasoner_path.value_or(dataset / "reasoner.json");
  if (fs::exists(reasoner)) injections = reason::load_injected_answers(reasoner);

  std::vector<GroundTruthRecord> gts;
  fs::path gt_path = opt.gt_path.value_or(dataset / "gt.json");
  if (fs::exists(gt_path)) gts = ser::gt_from_json(io::read_json_file(gt_path));

  nlohmann::json manifest;
  manifest["config"] = config_to_json(cfg);
  manifest["seed"] = opt.seed;
  manifest["jobs"] = opt.jobs;
  manifest["clips"] = nlohmann::json::object();

  if (opt.dry_run) {
    for (const auto& d : bundle_dirs) manifest["clips"][d.filename().string()] = "planned";
    RunManifest rm;
    rm.json_doc = std::move(manifest);
    return rm;
  }

  fs::create_directories(opt.out_dir);

  std::vector<ClipResult> results(bundle_dirs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= bundle_dirs.size()) return;
      ClipResult r;
      try {
        const ClipBundle b = load_clip_bundle(bundle_dirs[i]);
        std::optional<reason::InjectionRecord> inj;
        const auto it = injections.find(b.clip_id);
        if (it != injections.end()) inj = it->second;
        r = run_clip(b, cfg, opt.seed, inj);
        r.warnings.insert(r.warnings.begin(), b.warnings.begin(), b.warnings.end());
      } catch (const std::exception& e) {
        r.clip_id = bundle_dirs[i].filename().string();
        r.status = std::string("error:") + e.what();
      }
      results[i] = std::move(r);
    }
  };
  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Ordered, deterministic writes.
  bool any_error = false;
  std::vector<infer::ClipEstimate> ok_estimates;
  std::vector<loc::ConfidentRegion> ok_regions;
  std::vector<eval::PredictionRecord> preds;
  for (const auto& r : results) {
    const fs::path clip_dir = opt.out_dir / r.clip_id;
    fs::create_directories(clip_dir);
    if (r.smoothed) io::write_json_file(clip_dir / "traj.json", ser::smoothed_to_json(r.clip_id, *r.smoothed));
    if (r.views)
      io::write_json_file(clip_dir / "views.json",
                          ser::views_to_json(r.clip_id, r.views->region, r.views->local_frames,
                                             r.views->selected_views));
    if (r.lines_art)
      io::write_json_file(clip_dir / "lines3d.json",
                          ser::lines_to_json(r.clip_id, r.lines_art->fitted, r.lines_art->clusters,
                                             r.lines_art->candidates));
    if (r.frame) io::write_json_file(clip_dir / "frame.json", ser::frame_to_json(r.clip_id, *r.frame));

    std::string status = r.status;
    std::string reason_text;
    if (const auto pos = status.find(':'); pos != std::string::npos) {
      reason_text = status.substr(pos + 1);
      status = status.substr(0, pos);
    }
    io::write_json_file(clip_dir / "estimate.json",
                        ser::estimate_to_json(r.clip_id, r.scene_id, r.estimate, status, reason_text));
    if (opt.plot) write_plot_files(clip_dir, r);

    manifest["clips"][r.clip_id] = r.status;
    if (!r.warnings.empty()) manifest["warnings"][r.clip_id] = r.warnings;
    if (r.status.rfind("error:", 0) == 0) any_error = true;
    if (r.estimate && r.views) {
      ok_estimates.push_back(*r.estimate);
      ok_regions.push_back(r.views->region);
    }
    eval::PredictionRecord p;
    p.clip_id = r.clip_id;
    if (r.estimate) p.articulation = r.estimate->articulation;
    preds.push_back(p);
  }

  // Scene-level aggregation over successful estimates.
  if (!ok_estimates.empty()) {
    const auto groups = infer::group_clips(ok_regions, cfg);
    std::vector<infer::SceneEstimate> scene_estimates;
    std::vector<std::string> agg_warnings;
    for (size_t g = 0; g < groups.size(); ++g) {
      std::vector<infer::ClipEstimate> members;
      for (const int i : groups[g]) members.push_back(ok_estimates[i]);
      try {
        infer::SceneEstimate s = infer::aggregate_scene(members, &agg_warnings);
        s.group_id = "group" + std::to_string(g);
        scene_estimates.push_back(std::move(s));
      } catch (const Error& e) {
        agg_warnings.push_back(std::string("group") + std::to_string(g) + ": " + e.what());
      }
    }
    io::write_json_file(opt.out_dir / "scene.json", ser::scene_to_json(scene_estimates));
    if (!agg_warnings.empty()) manifest["warnings"]["scene_aggregation"] = agg_warnings;
  }

  if (!gts.empty()) {
    const eval::ScoreReport rep = eval::score_run(preds, gts, cfg, opt.micro);
    io::write_json_file(opt.out_dir / "report.json", ser::report_to_json(rep));
  }

  const auto t_end = std::chrono::steady_clock::now();
  manifest["elapsed_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count();
  io::write_json_file(opt.out_dir / "run_manifest.json", manifest);

  RunManifest rm;
  rm.json_doc = std::move(manifest);
  rm.any_error = any_error;
  return rm;
}

}  // namespace artikit::pipeline
