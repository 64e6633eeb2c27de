// artikit: articulation inference from pre-extracted egocentric perception
// data. Subcommands cover the pipeline stage by stage plus an end-to-end
// `run`; see README.md for file formats.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "artikit/dataset.hpp"
#include "artikit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace artikit;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::uint64_t seed = 17;
  bool seed_given = false;
};

Config resolve_config(const GlobalArgs& g) {
  Config cfg = default_config();
  if (!g.config_path.empty()) apply_config_json(cfg, io::read_json_file(g.config_path));
  cfg.validate();
  return cfg;
}

std::uint64_t resolve_seed(const GlobalArgs& g) {
  if (g.seed_given) return g.seed;
  if (const char* env = std::getenv("ARTIKIT_SEED")) return std::strtoull(env, nullptr, 10);
  return g.seed;
}

std::vector<Vec3> read_obj_vertices(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  std::vector<Vec3> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) != 0) continue;
    std::istringstream ls(line.substr(2));
    double x, y, z;
    if (ls >> x >> y >> z) out.emplace_back(x, y, z);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"artikit: articulation parameter inference pipeline"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON config overriding defaults field by field");
  auto* seed_opt = app.add_option("--seed", g.seed, "global RNG seed");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
  std::string synth_spec, synth_out;
  bool synth_reasoner = false;
  synth_cmd->add_option("--spec", synth_spec, "dataset spec JSON")->required();
  synth_cmd->add_option("--out", synth_out, "output dataset directory")->required();
  synth_cmd->add_flag("--emit-reasoner", synth_reasoner, "emit oracle reasoner votes from ground truth");

  // smooth
  auto* smooth_cmd = app.add_subcommand("smooth", "fingertip aggregation, contact trim, Kalman + RTS");
  std::string smooth_bundle, smooth_out;
  smooth_cmd->add_option("--bundle", smooth_bundle, "clip bundle directory")->required();
  smooth_cmd->add_option("--out", smooth_out, "output trajectory JSON")->required();

  // localize
  auto* loc_cmd = app.add_subcommand("localize", "voxel localization and view reselection");
  std::string loc_bundle, loc_cloud, loc_out;
  loc_cmd->add_option("--bundle", loc_bundle, "clip bundle directory")->required();
  loc_cmd->add_option("--cloud", loc_cloud, "point cloud PLY with per-vertex frame_id");
  loc_cmd->add_option("--out", loc_out, "output region/views JSON")->required();

  // lines
  auto* lines_cmd = app.add_subcommand("lines", "3D line lifting and LO-RANSAC candidates");
  std::string lines_bundle, lines_views, lines_out;
  lines_cmd->add_option("--bundle", lines_bundle, "clip bundle directory")->required();
  lines_cmd->add_option("--views", lines_views, "views JSON from `localize`")->required();
  lines_cmd->add_option("--out", lines_out, "output lines JSON")->required();

  // manhattan
  auto* man_cmd = app.add_subcommand("manhattan", "Manhattan frame from surface normals");
  std::vector<std::string> man_bundles, man_views;
  std::string man_out, man_scope = "scene";
  man_cmd->add_option("--bundle", man_bundles, "clip bundle directory (repeatable)")->required();
  man_cmd->add_option("--views", man_views, "views JSON per bundle (repeatable)")->required();
  man_cmd->add_option("--out", man_out, "output frame JSON")->required();
  man_cmd->add_option("--scope", man_scope, "clip|scene: pool normals across bundles (scene) or use the first only");

  // prompts
  auto* prompts_cmd = app.add_subcommand("prompts", "emit reasoner prompt payloads (frames + candidates)");
  std::string prompts_bundle, prompts_out;
  prompts_cmd->add_option("--bundle", prompts_bundle, "clip bundle directory")->required();
  prompts_cmd->add_option("--out", prompts_out, "output directory")->required();

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "full per-clip inference to an estimate JSON");
  std::string infer_bundle, infer_reasoner, infer_out;
  infer_cmd->add_option("--bundle", infer_bundle, "clip bundle directory")->required();
  infer_cmd->add_option("--reasoner", infer_reasoner, "injected reasoner answers JSON");
  infer_cmd->add_option("--out", infer_out, "output estimate JSON")->required();

  // aggregate
  auto* agg_cmd = app.add_subcommand("aggregate", "scene-level aggregation of clip estimates");
  std::string agg_estimates, agg_out, agg_meshes;
  agg_cmd->add_option("--estimates", agg_estimates, "directory of per-clip outputs (from `run`)")->required();
  agg_cmd->add_option("--out", agg_out, "output scene JSON")->required();
  agg_cmd->add_option("--meshes", agg_meshes, "directory of OBJ meshes: group by trajectory-to-mesh distance");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  std::string eval_pred, eval_gt, eval_out;
  bool eval_micro = false;
  eval_cmd->add_option("--pred", eval_pred, "directory of per-clip estimate JSONs")->required();
  eval_cmd->add_option("--gt", eval_gt, "ground truth JSON")->required();
  eval_cmd->add_option("--out", eval_out, "output report JSON")->required();
  eval_cmd->add_flag("--micro", eval_micro, "micro-average instead of per-scene macro");

  // run
  auto* run_cmd = app.add_subcommand("run", "end-to-end pipeline over a dataset");
  std::string run_dataset, run_out, run_reasoner, run_gt;
  int run_jobs = 1;
  bool run_dry = false, run_plot = false, run_micro = false;
  run_cmd->add_option("--dataset", run_dataset, "dataset directory (or a single bundle)")->required();
  run_cmd->add_option("--out", run_out, "output directory")->required();
  run_cmd->add_option("--reasoner", run_reasoner, "injected reasoner answers JSON");
  run_cmd->add_option("--gt", run_gt, "ground truth JSON (defaults to dataset/gt.json)");
  run_cmd->add_option("--jobs", run_jobs, "clip-level parallelism");
  run_cmd->add_flag("--dry-run", run_dry, "plan only; no artifacts");
  run_cmd->add_flag("--plot", run_plot, "emit per-clip polyline/axis exports");
  run_cmd->add_flag("--micro", run_micro, "micro-average evaluation");

  CLI11_PARSE(app, argc, argv);
  g.seed_given = seed_opt->count() > 0;

  try {
    const Config cfg = resolve_config(g);
    const std::uint64_t seed = resolve_seed(g);

    if (*synth_cmd) {
      const auto spec_json = io::read_json_file(synth_spec);
      const auto specs = synth::specs_from_json(spec_json);
      const bool emit = synth_reasoner || spec_json.value("emit_reasoner", false);
      synth::write_dataset(specs, synth_out, emit, cfg.k_frames);
      std::cout << "wrote " << specs.size() << " clips to " << synth_out << "\n";
      return 0;
    }

    if (*smooth_cmd) {
      const ClipBundle b = load_clip_bundle(smooth_bundle);
      const auto smoothed = traj::smooth_clip(b.fingertips, cfg);
      io::write_json_file(smooth_out, ser::smoothed_to_json(b.clip_id, smoothed));
      return 0;
    }

    if (*loc_cmd) {
      const ClipBundle b = load_clip_bundle(loc_bundle);
      std::optional<PointCloud> cloud;
      if (!loc_cloud.empty()) cloud = io::read_ply(loc_cloud);
      const auto views = pipeline::stage_localize(b, cfg, cloud, {});
      io::write_json_file(loc_out,
                          ser::views_to_json(b.clip_id, views.region, views.local_frames, views.selected_views));
      return 0;
    }

    if (*lines_cmd) {
      const ClipBundle b = load_clip_bundle(lines_bundle);
      const auto views_json = io::read_json_file(lines_views);
      const auto selected = views_json.at("selected_views").get<std::vector<int>>();
      const auto art = pipeline::stage_lines(b, selected, cfg,
                                             derive_seed(pipeline::clip_seed(seed, b.clip_id), "lines"));
      io::write_json_file(lines_out, ser::lines_to_json(b.clip_id, art.fitted, art.clusters, art.candidates));
      return 0;
    }

    if (*man_cmd) {
      if (man_views.size() != man_bundles.size())
        throw Error("manhattan: one --views per --bundle required");
      std::vector<ClipBundle> bundles;
      std::vector<const ClipBundle*> ptrs;
      std::vector<std::vector<int>> selected;
      const size_t count = man_scope == "clip" ? 1 : man_bundles.size();
      for (size_t i = 0; i < count; ++i) {
        bundles.push_back(load_clip_bundle(man_bundles[i]));
        selected.push_back(io::read_json_file(man_views[i]).at("selected_views").get<std::vector<int>>());
      }
      for (const auto& b : bundles) ptrs.push_back(&b);
      const auto frame = pipeline::stage_manhattan(
          ptrs, selected, cfg, derive_seed(pipeline::clip_seed(seed, bundles.front().clip_id), "manhattan"));
      io::write_json_file(man_out, ser::frame_to_json(bundles.front().clip_id, frame));
      return 0;
    }

    if (*prompts_cmd) {
      const ClipBundle b = load_clip_bundle(prompts_bundle);
      const std::uint64_t cs = pipeline::clip_seed(seed, b.clip_id);
      const auto smoothed = traj::smooth_clip(b.fingertips, cfg);
      const auto views = pipeline::stage_localize(b, cfg, std::nullopt, {});
      const auto art = pipeline::stage_lines(b, views.selected_views, cfg, derive_seed(cs, "lines"));
      fs::create_directories(prompts_out);
      io::write_json_file(fs::path(prompts_out) / (b.clip_id + ".json"),
                          pipeline::make_prompts_json(b, smoothed, art, views, cfg));
      return 0;
    }

    if (*infer_cmd) {
      const ClipBundle b = load_clip_bundle(infer_bundle);
      std::optional<reason::InjectionRecord> inj;
      if (!infer_reasoner.empty()) {
        auto injections = reason::load_injected_answers(infer_reasoner);
        const auto it = injections.find(b.clip_id);
        if (it != injections.end()) inj = it->second;
      }
      const auto r = pipeline::run_clip(b, cfg, seed, inj);
      std::string status = r.status, reason_text;
      if (const auto pos = status.find(':'); pos != std::string::npos) {
        reason_text = status.substr(pos + 1);
        status = status.substr(0, pos);
      }
      io::write_json_file(infer_out, ser::estimate_to_json(r.clip_id, r.scene_id, r.estimate, status, reason_text));
      if (r.status.rfind("error:", 0) == 0) {
        std::cerr << r.clip_id << ": " << r.status << "\n";
        return 1;
      }
      return 0;
    }

    if (*agg_cmd) {
      std::vector<infer::ClipEstimate> estimates;
      std::vector<loc::ConfidentRegion> regions;
      std::vector<traj::SmoothedTrajectory> trajs;
      std::vector<fs::path> clip_dirs;
      for (const auto& entry : fs::directory_iterator(agg_estimates))
        if (entry.is_directory() && fs::exists(entry.path() / "estimate.json")) clip_dirs.push_back(entry.path());
      std::sort(clip_dirs.begin(), clip_dirs.end());
      for (const auto& dir : clip_dirs) {
        const auto ej = io::read_json_file(dir / "estimate.json");
        if (ej.value("status", std::string()) != "ok" || !ej.contains("articulation")) continue;
        infer::ClipEstimate e;
        e.clip_id = ej.at("clip_id").get<std::string>();
        e.scene_id = ej.value("scene_id", std::string("scene0"));
        e.articulation = ser::articulation_from_json(ej.at("articulation"));
        estimates.push_back(e);
        if (fs::exists(dir / "views.json"))
          regions.push_back(ser::region_from_json(io::read_json_file(dir / "views.json")));
        if (fs::exists(dir / "traj.json"))
          trajs.push_back(ser::smoothed_from_json(io::read_json_file(dir / "traj.json")));
      }
      if (estimates.empty()) throw Error("aggregate: no successful estimates under " + agg_estimates);

      std::vector<std::vector<int>> groups;
      if (!agg_meshes.empty()) {
        if (trajs.size() != estimates.size())
          throw Error("aggregate: mesh mode requires traj.json next to every estimate");
        std::vector<std::vector<Vec3>> meshes;
        std::vector<fs::path> mesh_files;
        for (const auto& entry : fs::directory_iterator(agg_meshes))
          if (entry.path().extension() == ".obj") mesh_files.push_back(entry.path());
        std::sort(mesh_files.begin(), mesh_files.end());
        for (const auto& f : mesh_files) meshes.push_back(read_obj_vertices(f));
        groups = infer::group_clips_by_mesh(trajs, meshes, cfg);
      } else {
        if (regions.size() != estimates.size())
          throw Error("aggregate: views.json with region required next to every estimate");
        groups = infer::group_clips(regions, cfg);
      }

      std::vector<infer::SceneEstimate> scene_estimates;
      std::vector<std::string> warnings;
      for (size_t gi = 0; gi < groups.size(); ++gi) {
        std::vector<infer::ClipEstimate> members;
        for (const int i : groups[gi]) members.push_back(estimates[i]);
        auto s = infer::aggregate_scene(members, &warnings);
        s.group_id = "group" + std::to_string(gi);
        scene_estimates.push_back(std::move(s));
      }
      io::write_json_file(agg_out, ser::scene_to_json(scene_estimates));
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      return 0;
    }

    if (*eval_cmd) {
      const auto gts = ser::gt_from_json(io::read_json_file(eval_gt));
      std::vector<eval::PredictionRecord> preds;
      std::vector<fs::path> files;
      for (const auto& entry : fs::recursive_directory_iterator(eval_pred))
        if (entry.is_regular_file() && entry.path().filename() == "estimate.json") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        const auto ej = io::read_json_file(f);
        eval::PredictionRecord p;
        p.clip_id = ej.at("clip_id").get<std::string>();
        if (ej.value("status", std::string()) == "ok" && ej.contains("articulation"))
          p.articulation = ser::articulation_from_json(ej.at("articulation"));
        preds.push_back(p);
      }
      const auto rep = eval::score_run(preds, gts, cfg, eval_micro);
      io::write_json_file(eval_out, ser::report_to_json(rep));
      std::cout << eval::render_table(rep);
      return 0;
    }

    if (*run_cmd) {
      pipeline::RunOptions opt;
      opt.out_dir = run_out;
      opt.seed = seed;
      opt.jobs = run_jobs;
      opt.dry_run = run_dry;
      opt.plot = run_plot;
      opt.micro = run_micro;
      if (!run_reasoner.empty()) opt.reasoner_path = run_reasoner;
      if (!run_gt.empty()) opt.gt_path = run_gt;
      opt.config = cfg;
      const auto rm = pipeline::run_pipeline(run_dataset, opt);
      if (run_dry) std::cout << rm.json_doc.dump(2) << "\n";
      for (const auto& [clip, status] : rm.json_doc.at("clips").items())
        if (status.get<std::string>() != "ok" && status.get<std::string>() != "planned")
          std::cerr << clip << ": " << status.get<std::string>() << "\n";
      return rm.any_error ? 1 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
