#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "artikit/bundle.hpp"
#include "artikit/eval.hpp"
#include "artikit/infer.hpp"
#include "artikit/lines3d.hpp"
#include "artikit/localize.hpp"
#include "artikit/manhattan.hpp"
#include "artikit/trajectory.hpp"
#include "artikit/types.hpp"

namespace artikit::ser {

using nlohmann::json;

inline json smoothed_to_json(const std::string& clip_id, const traj::SmoothedTrajectory& t) {
  json j;
  j["clip_id"] = clip_id;
  j["timestamps"] = t.timestamps;
  json pos = json::array();
  for (const auto& p : t.positions) pos.push_back(io::vec3_to_json(p));
  j["positions"] = pos;
  json vel = json::array();
  for (const auto& v : t.velocities) vel.push_back(io::vec3_to_json(v));
  j["velocities"] = vel;
  json gated = json::array();
  for (size_t i = 0; i < t.outlier_mask.size(); ++i)
    if (t.outlier_mask[i]) gated.push_back(i);
  j["gated_indices"] = gated;
  return j;
}

inline traj::SmoothedTrajectory smoothed_from_json(const json& j) {
  traj::SmoothedTrajectory t;
  t.timestamps = j.at("timestamps").get<std::vector<double>>();
  for (const auto& p : j.at("positions")) t.positions.push_back(io::vec3_from_json(p, "positions"));
  if (j.contains("velocities"))
    for (const auto& v : j.at("velocities")) t.velocities.push_back(io::vec3_from_json(v, "velocities"));
  return t;
}

inline json views_to_json(const std::string& clip_id, const loc::ConfidentRegion& region,
                          const std::vector<int>& local_frames, const std::vector<int>& selected) {
  json j;
  j["clip_id"] = clip_id;
  j["region"] = {{"voxel_size", region.voxel_size},
                 {"origin", io::vec3_to_json(region.origin)},
                 {"bounds_min", io::vec3_to_json(region.bounds_min)},
                 {"bounds_max", io::vec3_to_json(region.bounds_max)}};
  json idx = json::array();
  for (const auto& v : region.indices) idx.push_back(json::array({v.x, v.y, v.z}));
  j["region"]["indices"] = idx;
  j["local_frames"] = local_frames;
  j["selected_views"] = selected;
  return j;
}

inline loc::ConfidentRegion region_from_json(const json& j) {
  loc::ConfidentRegion r;
  const auto& rj = j.at("region");
  r.voxel_size = rj.at("voxel_size").get<double>();
  r.origin = io::vec3_from_json(rj.at("origin"), "region.origin");
  r.bounds_min = io::vec3_from_json(rj.at("bounds_min"), "region.bounds_min");
  r.bounds_max = io::vec3_from_json(rj.at("bounds_max"), "region.bounds_max");
  for (const auto& v : rj.at("indices"))
    r.indices.push_back({v[0].get<int>(), v[1].get<int>(), v[2].get<int>()});
  return r;
}

inline json line_to_json(const Line3D& l) {
  return json{{"direction", io::vec3_to_json(l.direction)},
              {"origin", io::vec3_to_json(l.origin)},
              {"support", l.support},
              {"inlier_rate", l.inlier_rate},
              {"projected_length", l.projected_length}};
}

inline Line3D line_from_json(const json& j) {
  Line3D l;
  l.direction = io::vec3_from_json(j.at("direction"), "line.direction");
  l.origin = io::vec3_from_json(j.at("origin"), "line.origin");
  l.support = j.at("support").get<int>();
  l.inlier_rate = j.at("inlier_rate").get<double>();
  l.projected_length = j.at("projected_length").get<double>();
  return l;
}

inline json lines_to_json(const std::string& clip_id, const std::vector<Line3D>& fitted,
                          const std::vector<std::vector<int>>& clusters,
                          const std::vector<Line3D>& candidates) {
  json j;
  j["clip_id"] = clip_id;
  json fl = json::array();
  for (size_t i = 0; i < fitted.size(); ++i) {
    json rec = line_to_json(fitted[i]);
    rec["id"] = i;
    fl.push_back(rec);
  }
  j["lines"] = fl;
  j["clusters"] = clusters;
  json cd = json::array();
  for (size_t i = 0; i < candidates.size(); ++i) {
    json rec = line_to_json(candidates[i]);
    rec["id"] = i;
    cd.push_back(rec);
  }
  j["candidates"] = cd;
  return j;
}

inline std::vector<Line3D> candidates_from_json(const json& j) {
  std::vector<Line3D> out;
  for (const auto& rec : j.at("candidates")) out.push_back(line_from_json(rec));
  return out;
}

inline json frame_to_json(const std::string& clip_id, const manhattan::ManhattanFrame& f) {
  return json{{"clip_id", clip_id},
              {"m1", io::vec3_to_json(f.m1)},
              {"m2", io::vec3_to_json(f.m2)},
              {"m3", io::vec3_to_json(f.m3)},
              {"orthogonality_residual", f.orthogonality_residual},
              {"support", {f.support[0], f.support[1], f.support[2]}}};
}

inline manhattan::ManhattanFrame frame_from_json(const json& j) {
  manhattan::ManhattanFrame f;
  f.m1 = io::vec3_from_json(j.at("m1"), "m1");
  f.m2 = io::vec3_from_json(j.at("m2"), "m2");
  f.m3 = io::vec3_from_json(j.at("m3"), "m3");
  f.orthogonality_residual = j.at("orthogonality_residual").get<double>();
  if (j.contains("support"))
    for (int i = 0; i < 3; ++i) f.support[i] = j.at("support")[i].get<double>();
  return f;
}

inline json articulation_to_json(const Articulation& a) {
  return json{{"motion_type", to_string(a.motion_type)},
              {"axis", io::vec3_to_json(a.axis)},
              {"origin", io::vec3_to_json(a.origin)}};
}

inline Articulation articulation_from_json(const json& j) {
  Articulation a;
  a.motion_type = motion_type_from_string(j.at("motion_type").get<std::string>());
  a.axis = io::vec3_from_json(j.at("axis"), "articulation.axis");
  a.origin = io::vec3_from_json(j.at("origin"), "articulation.origin");
  a.validate();
  return a;
}

/// Estimate record written per clip. Rejected clips carry a reason and no
/// articulation.
inline json estimate_to_json(const std::string& clip_id, const std::string& scene_id,
                             const std::optional<infer::ClipEstimate>& est,
                             const std::string& status, const std::string& reason) {
  json j;
  j["clip_id"] = clip_id;
  j["scene_id"] = scene_id;
  j["status"] = status;
  if (!reason.empty()) j["reason"] = reason;
  if (est) {
    j["articulation"] = articulation_to_json(est->articulation);
    j["diagnostics"] = {{"radius_mean", est->diagnostics.radius_mean},
                        {"radius_variance", est->diagnostics.radius_variance},
                        {"inlier_rate", est->diagnostics.inlier_rate},
                        {"chosen_candidate", est->diagnostics.chosen_candidate},
                        {"manhattan_axis", est->diagnostics.manhattan_axis},
                        {"provenance", est->diagnostics.provenance}};
  }
  return j;
}

inline json gt_to_json(const std::vector<GroundTruthRecord>& gts) {
  json j = json::array();
  for (const auto& g : gts)
    j.push_back({{"clip_id", g.clip_id},
                 {"scene_id", g.scene_id},
                 {"motion_type", to_string(g.motion_type)},
                 {"axis", io::vec3_to_json(g.axis)},
                 {"origin", io::vec3_to_json(g.origin)}});
  return j;
}

inline std::vector<GroundTruthRecord> gt_from_json(const json& j) {
  std::vector<GroundTruthRecord> out;
  for (const auto& rec : j) {
    GroundTruthRecord g;
    g.clip_id = rec.at("clip_id").get<std::string>();
    g.scene_id = rec.value("scene_id", std::string("scene0"));
    g.motion_type = motion_type_from_string(rec.at("motion_type").get<std::string>());
    g.axis = io::vec3_from_json(rec.at("axis"), "gt.axis").normalized();
    g.origin = io::vec3_from_json(rec.at("origin"), "gt.origin");
    out.push_back(g);
  }
  return out;
}

inline json report_to_json(const eval::ScoreReport& rep) {
  auto scene_json = [](const eval::SceneScores& s) {
    return json{{"scene_id", s.scene_id}, {"clips", s.clips},       {"detected", s.detected},
                {"match_rate", s.match_rate}, {"m", s.m},           {"ma", s.ma},
                {"mao", s.mao},           {"m_cond", s.m_cond},     {"ma_cond", s.ma_cond},
                {"mao_cond", s.mao_cond}};
  };
  json j;
  j["micro"] = rep.micro;
  json scenes = json::array();
  for (const auto& s : rep.scenes) scenes.push_back(scene_json(s));
  j["scenes"] = scenes;
  j["overall"] = scene_json(rep.overall);
  return j;
}

inline json scene_to_json(const std::vector<infer::SceneEstimate>& groups) {
  json j;
  json gs = json::array();
  for (const auto& g : groups)
    gs.push_back({{"id", g.group_id},
                  {"articulation", articulation_to_json(g.articulation)},
                  {"members", g.member_clip_ids},
                  {"agreement",
                   {{"max_axis_spread_deg", g.max_axis_spread_deg},
                    {"max_origin_spread_m", g.max_origin_spread_m}}}});
  j["groups"] = gs;
  return j;
}

}  // namespace artikit::ser
