#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "artikit/config.hpp"
#include "artikit/geometry.hpp"
#include "artikit/localize.hpp"
#include "artikit/manhattan.hpp"
#include "artikit/trajectory.hpp"
#include "artikit/types.hpp"

namespace artikit::infer {

/// First principal component of the mean-centered smoothed positions,
/// sign-oriented along the net displacement.
inline Vec3 principal_motion_direction(const traj::SmoothedTrajectory& t) {
  if (t.size() < 3) throw Error("principal_motion_direction: at least 3 points required");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : t.positions) centroid += p;
  centroid /= static_cast<double>(t.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : t.positions) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  if (es.eigenvalues()[2] <= 1e-18) throw Error("principal_motion_direction: zero-variance trajectory");
  Vec3 v = es.eigenvectors().col(2).normalized();
  const Vec3 net = t.positions.back() - t.positions.front();
  const double d = v.dot(net);
  if (d < 0.0) v = -v;
  if (std::abs(d) < 1e-12) v = geo::canonical_sign_first(v);  // closed loop: canonical sign
  return v;
}

struct PrismaticResult {
  Articulation articulation;
  int axis_index = 0;        // chosen Manhattan axis
  double inlier_rate = 0.0;  // fraction of points within prism_tol of the axis line
  bool accepted = false;
};

/// Prismatic inference: axis = Manhattan direction maximizing |v_h . m|
/// (ties to the lower index), sign-flipped along v_h; origin = first
/// smoothed point. Accepted iff the inlier rate against the line
/// (origin, axis) with tolerance prism_tol reaches min_inlier_rate.
inline PrismaticResult infer_prismatic(const traj::SmoothedTrajectory& t,
                                       const manhattan::ManhattanFrame& frame, const Config& cfg) {
  const Vec3 vh = principal_motion_direction(t);
  int best = 0;
  double best_align = -1.0;
  for (int i = 0; i < 3; ++i) {
    const double a = std::abs(vh.dot(frame.axis(i)));
    if (a > best_align + 1e-15) {  // strict improvement: ties keep the lower index
      best_align = a;
      best = i;
    }
  }
  Vec3 axis = frame.axis(best).normalized();
  if (axis.dot(vh) < 0.0) axis = -axis;
  const Vec3 origin = t.positions.front();

  int inliers = 0;
  for (const auto& p : t.positions)
    if (geo::point_line_distance(p, origin, axis) <= cfg.prism_tol) ++inliers;
  const double rate = static_cast<double>(inliers) / static_cast<double>(t.size());

  PrismaticResult r;
  r.articulation = {MotionType::prismatic, axis, origin};
  r.axis_index = best;
  r.inlier_rate = rate;
  r.accepted = rate >= cfg.min_inlier_rate;
  return r;
}

struct RevoluteResult {
  Articulation articulation;
  int candidate_index = 0;
  double radius_mean = 0.0;
  double radius_variance = 0.0;
  double inlier_rate = 0.0;  // fraction within the torus tolerance band
};

/// Revolute inference over presented candidate lines. For each candidate,
/// d_t = ||(p_t - q) x u||; candidates whose mean radius exceeds max_radius
/// or whose torus-band inlier fraction falls below min_inlier_rate are
/// discarded; the survivor with minimal radius variance wins (ties to the
/// lower candidate index). Origin is the trajectory centroid projected onto
/// the chosen axis.
inline RevoluteResult infer_revolute(const traj::SmoothedTrajectory& t,
                                     std::span<const Line3D> candidates, const Config& cfg) {
  if (candidates.empty()) throw Rejection("no plausible revolute axis");
  if (t.size() < 3) throw Error("infer_revolute: at least 3 smoothed points required");

  const double n = static_cast<double>(t.size());
  int best = -1;
  double best_var = std::numeric_limits<double>::infinity();
  double best_mean = 0.0, best_rate = 0.0;
  for (size_t c = 0; c < candidates.size(); ++c) {
    const Line3D& l = candidates[c];
    double sum = 0.0, sum2 = 0.0;
    for (const auto& p : t.positions) {
      const double d = geo::point_line_distance(p, l.origin, l.direction);
      sum += d;
      sum2 += d * d;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    if (mean > cfg.max_radius) continue;
    const double band = std::clamp(cfg.torus_tol_ratio * mean, cfg.torus_tol_min, cfg.torus_tol_max);
    int inl = 0;
    for (const auto& p : t.positions) {
      const double d = geo::point_line_distance(p, l.origin, l.direction);
      if (std::abs(d - mean) <= band) ++inl;
    }
    const double rate = inl / n;
    if (rate < cfg.min_inlier_rate) continue;
    if (var < best_var) {
      best_var = var;
      best = static_cast<int>(c);
      best_mean = mean;
      best_rate = rate;
    }
  }
  if (best < 0) throw Rejection("no plausible revolute axis");

  const Line3D& l = candidates[best];
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : t.positions) centroid += p;
  centroid /= n;
  const Vec3 origin = geo::project_to_line(centroid, l.origin, l.direction);

  RevoluteResult r;
  r.articulation = {MotionType::revolute, l.direction.normalized(), origin};
  r.candidate_index = best;
  r.radius_mean = best_mean;
  r.radius_variance = best_var;
  r.inlier_rate = best_rate;
  return r;
}

struct Diagnostics {
  double radius_mean = 0.0;
  double radius_variance = 0.0;
  double inlier_rate = 0.0;
  int chosen_candidate = -1;  // revolute: presented-candidate index
  int manhattan_axis = -1;    // prismatic: Manhattan axis index
  std::string provenance = "heuristic";
};

struct ClipEstimate {
  std::string clip_id;
  std::string scene_id = "scene0";
  Articulation articulation;
  Diagnostics diagnostics;
};

struct ResolvedMotion {
  std::optional<MotionType> type;
  std::string provenance = "heuristic";  // "injected" or "heuristic"
};

struct InferInputs {
  const traj::SmoothedTrajectory& trajectory;
  std::optional<manhattan::ManhattanFrame> frame;
  std::span<const Line3D> candidates;
  ResolvedMotion motion;
};

/// Dispatches to the prismatic or revolute estimator once the motion type
/// is resolved; attaches diagnostics. Unresolved motion or a failed
/// acceptance check is a rejection.
inline ClipEstimate infer_clip(const std::string& clip_id, const InferInputs& in, const Config& cfg) {
  if (!in.motion.type) throw Rejection("motion type unresolved");
  ClipEstimate e;
  e.clip_id = clip_id;
  e.diagnostics.provenance = in.motion.provenance;
  if (*in.motion.type == MotionType::prismatic) {
    if (!in.frame) throw Rejection("no Manhattan frame available");
    const PrismaticResult r = infer_prismatic(in.trajectory, *in.frame, cfg);
    if (!r.accepted)
      throw Rejection("prismatic inlier rate " + std::to_string(r.inlier_rate) + " below threshold");
    e.articulation = r.articulation;
    e.diagnostics.inlier_rate = r.inlier_rate;
    e.diagnostics.manhattan_axis = r.axis_index;
  } else {
    const RevoluteResult r = infer_revolute(in.trajectory, in.candidates, cfg);
    e.articulation = r.articulation;
    e.diagnostics.radius_mean = r.radius_mean;
    e.diagnostics.radius_variance = r.radius_variance;
    e.diagnostics.inlier_rate = r.inlier_rate;
    e.diagnostics.chosen_candidate = r.candidate_index;
  }
  e.articulation.validate();
  return e;
}

/// Single-link grouping of clips by confident-region voxel IoU.
inline std::vector<std::vector<int>> group_clips(std::span<const loc::ConfidentRegion> regions,
                                                 const Config& cfg) {
  const size_t n = regions.size();
  if (n == 0) throw Error("group_clips: at least one region required");
  std::vector<int> parent(n);
  for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };

  auto key = [](const loc::VoxelIndex& v) {
    return std::tuple<int, int, int>(v.x, v.y, v.z);
  };
  for (size_t a = 0; a < n; ++a) {
    std::set<std::tuple<int, int, int>> sa;
    for (const auto& v : regions[a].indices) sa.insert(key(v));
    for (size_t b = a + 1; b < n; ++b) {
      size_t inter = 0;
      for (const auto& v : regions[b].indices)
        if (sa.count(key(v))) ++inter;
      const size_t uni = sa.size() + regions[b].indices.size() - inter;
      const double iou = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
      if (iou > cfg.scene_iou_thresh) parent[find(static_cast<int>(a))] = find(static_cast<int>(b));
    }
  }
  std::map<int, std::vector<int>> groups;
  for (size_t i = 0; i < n; ++i) groups[find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

/// Alternative grouping: each clip joins the nearest object point set
/// (mean of per-point minimum distances from the trajectory), provided it
/// is within mesh_dist_thresh; unmatched clips stay singletons.
inline std::vector<std::vector<int>> group_clips_by_mesh(
    std::span<const traj::SmoothedTrajectory> trajectories,
    std::span<const std::vector<Vec3>> object_points, const Config& cfg) {
  if (trajectories.empty()) throw Error("group_clips_by_mesh: at least one trajectory required");
  std::map<int, std::vector<int>> by_object;
  std::vector<std::vector<int>> out;
  for (size_t t = 0; t < trajectories.size(); ++t) {
    int best_obj = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t o = 0; o < object_points.size(); ++o) {
      if (object_points[o].empty()) continue;
      double acc = 0.0;
      for (const auto& p : trajectories[t].positions) {
        double mind = std::numeric_limits<double>::infinity();
        for (const auto& q : object_points[o]) mind = std::min(mind, (p - q).norm());
        acc += mind;
      }
      const double mean = acc / static_cast<double>(trajectories[t].size());
      if (mean < best_d) {
        best_d = mean;
        best_obj = static_cast<int>(o);
      }
    }
    if (best_obj >= 0 && best_d <= cfg.mesh_dist_thresh)
      by_object[best_obj].push_back(static_cast<int>(t));
    else
      out.push_back({static_cast<int>(t)});
  }
  for (auto& [obj, members] : by_object) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

struct SceneEstimate {
  std::string group_id;
  Articulation articulation;
  std::vector<std::string> member_clip_ids;
  double max_axis_spread_deg = 0.0;
  double max_origin_spread_m = 0.0;
};

/// Aggregates one group: majority motion type (minority members dropped
/// with a warning), axis = normalized mean of sign-aligned member axes,
/// origin = componentwise median (revolute origins stay on the aggregated
/// axis line anchored at that median).
inline SceneEstimate aggregate_scene(std::span<const ClipEstimate> members,
                                     std::vector<std::string>* warnings = nullptr) {
  if (members.empty()) throw Error("aggregate_scene: empty group");
  int rev = 0;
  for (const auto& m : members)
    if (m.articulation.motion_type == MotionType::revolute) ++rev;
  const int pris = static_cast<int>(members.size()) - rev;
  if (rev == pris && rev > 0) {
    if (warnings) warnings->push_back("scene group tie on motion type; keeping revolute members");
  }
  const MotionType type = rev >= pris ? MotionType::revolute : MotionType::prismatic;

  std::vector<const ClipEstimate*> kept;
  for (const auto& m : members) {
    if (m.articulation.motion_type == type)
      kept.push_back(&m);
    else if (warnings)
      warnings->push_back("clip " + m.clip_id + " dropped from scene group (minority motion type)");
  }
  if (kept.empty()) throw Error("aggregate_scene: empty group after majority filtering");

  const Vec3 ref = kept.front()->articulation.axis;
  Vec3 axis_sum = Vec3::Zero();
  for (const auto* m : kept) {
    Vec3 a = m->articulation.axis;
    if (a.dot(ref) < 0.0) a = -a;
    axis_sum += a;
  }
  const Vec3 axis = axis_sum.normalized();

  auto median_of = [&](int c) {
    std::vector<double> v;
    v.reserve(kept.size());
    for (const auto* m : kept) v.push_back(m->articulation.origin[c]);
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  Vec3 origin(median_of(0), median_of(1), median_of(2));
  // Revolute: the aggregated axis line is anchored at the median origin, so
  // the projection onto it is the identity; recorded for clarity.
  if (type == MotionType::revolute) origin = geo::project_to_line(origin, origin, axis);

  SceneEstimate s;
  s.articulation = {type, axis, origin};
  for (const auto* m : kept) s.member_clip_ids.push_back(m->clip_id);
  for (size_t i = 0; i < kept.size(); ++i) {
    for (size_t j = i + 1; j < kept.size(); ++j) {
      s.max_axis_spread_deg =
          std::max(s.max_axis_spread_deg,
                   geo::axis_angle_deg(kept[i]->articulation.axis, kept[j]->articulation.axis));
      s.max_origin_spread_m =
          std::max(s.max_origin_spread_m,
                   (kept[i]->articulation.origin - kept[j]->articulation.origin).norm());
    }
  }
  return s;
}

}  // namespace artikit::infer
