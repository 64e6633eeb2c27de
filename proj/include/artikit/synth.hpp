#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artikit/bundle.hpp"
#include "artikit/config.hpp"
#include "artikit/geometry.hpp"
#include "artikit/reason.hpp"
#include "artikit/rng.hpp"
#include "artikit/types.hpp"

namespace artikit::synth {

/// Axis-aligned room; the interacted fixture sits on the wall y = depth.
struct RoomSpec {
  double width = 4.0;   // x in [0, width]
  double depth = 3.0;   // y in [0, depth]
  double height = 2.5;  // z in [0, height]
};

struct ImageSpec {
  int width = 128;
  int height = 96;
  double fx = 110.0;
  double fy = 110.0;
};

struct NoiseSpec {
  double traj_sigma = 0.02;        // m, i.i.d. on the contact point
  double depth_sigma = 0.002;      // m
  double normal_jitter_deg = 5.0;  // von-Mises-style angular jitter
  double outlier_fraction = 0.2;   // fraction of uniformly random normals
};

/// One synthetic clip: fixture type and geometry, camera path, noise.
struct SyntheticSpec {
  std::string clip_id = "clip";
  std::string scene_id = "synth0";
  std::uint64_t seed = 1;
  MotionType type = MotionType::revolute;
  RoomSpec room;
  ImageSpec image;
  NoiseSpec noise;

  int frames = 60;           // total; pre/post approach segments included
  int distractors = 3;       // distractor room/counter edges
  double fixture_x = 2.0;    // hinge / drawer-front position on the wall
  double handle_z = 1.1;     // interaction height
  double radius = 0.4;       // revolute: rotation radius (0, max_radius]
  double arc_deg = 80.0;     // revolute: swept angle
  bool horizontal_hinge = false;
  double extent = 0.3;       // prismatic: travel distance
  int slide_axis = 1;        // prismatic: 0 = along the wall (x), 1 = out of it (y)

  double camera_distance = 1.5;
  double fps = 30.0;
  int cloud_stride = 6;      // depth subsampling for the derived point cloud
  int normals_per_frame = 25;
  bool emit_masks = false;

  void validate() const {
    if (!(radius > 0.0)) throw Error("synthetic spec: radius > 0 required");
    if (noise.traj_sigma < 0 || noise.depth_sigma < 0 || noise.normal_jitter_deg < 0 ||
        noise.outlier_fraction < 0)
      throw Error("synthetic spec: noise levels must be >= 0");
    if (frames < 12) throw Error("synthetic spec: at least 12 frames required");
  }
};

namespace detail {

/// y-down look-at camera (camera-to-world), +z forward.
inline CameraPose look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 up_world(0.0, 0.0, 1.0);
  Vec3 x = (Vec3(-up_world).cross(forward));
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = forward.cross(x);
  CameraPose p;
  p.rotation.col(0) = x;
  p.rotation.col(1) = y;
  p.rotation.col(2) = forward;
  p.translation = eye;
  return p;
}

/// First intersection of an inside ray with the room box; returns z-depth
/// (the ray直 direction has unit camera-z) and the inward face normal.
struct RoomHit {
  double depth = 0.0;
  Vec3 normal_world = Vec3::UnitZ();
};

inline std::optional<RoomHit> raycast_room(const RoomSpec& room, const Vec3& origin, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 normal = Vec3::UnitZ();
  auto consider = [&](double s, const Vec3& n) {
    if (s > 1e-6 && s < best) {
      best = s;
      normal = n;
    }
  };
  if (dir.x() < -1e-12) consider((0.0 - origin.x()) / dir.x(), Vec3(1, 0, 0));
  if (dir.x() > 1e-12) consider((room.width - origin.x()) / dir.x(), Vec3(-1, 0, 0));
  if (dir.y() < -1e-12) consider((0.0 - origin.y()) / dir.y(), Vec3(0, 1, 0));
  if (dir.y() > 1e-12) consider((room.depth - origin.y()) / dir.y(), Vec3(0, -1, 0));
  if (dir.z() < -1e-12) consider((0.0 - origin.z()) / dir.z(), Vec3(0, 0, 1));
  if (dir.z() > 1e-12) consider((room.height - origin.z()) / dir.z(), Vec3(0, 0, -1));
  if (!std::isfinite(best)) return std::nullopt;
  return RoomHit{best, normal};
}

/// 3D source edge with a stable correspondence id.
struct Edge3D {
  Vec3 a, b;
  int id = 0;
};

/// Liang-Barsky clip of a 2D segment to [0, w) x [0, h) with a small inset
/// so endpoints satisfy the strict in-bounds invariant.
inline std::optional<std::pair<Vec2, Vec2>> clip_to_image(Vec2 a, Vec2 b, int w, int h) {
  const double xmin = 0.0, ymin = 0.0;
  const double xmax = w - 1.001, ymax = h - 1.001;
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  auto clip = [&](double p, double q) {
    if (std::abs(p) < 1e-15) return q >= 0.0;
    const double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
    return true;
  };
  if (!clip(-d.x(), a.x() - xmin)) return std::nullopt;
  if (!clip(d.x(), xmax - a.x())) return std::nullopt;
  if (!clip(-d.y(), a.y() - ymin)) return std::nullopt;
  if (!clip(d.y(), ymax - a.y())) return std::nullopt;
  if (t0 >= t1) return std::nullopt;
  // Clamp away the last-ulp residue the parametric form can leave.
  auto snap = [&](Vec2 p) {
    return Vec2(std::clamp(p.x(), xmin, xmax), std::clamp(p.y(), ymin, ymax));
  };
  return std::make_pair(snap(a + t0 * d), snap(a + t1 * d));
}

inline Vec3 jitter_direction(const Vec3& n, double sigma_deg, Rng& rng) {
  const double angle = num::deg2rad(sigma_deg) * rng.normal();
  const Vec3 axis = geo::rotation_about(n, rng.uniform(0.0, 2.0 * num::kPi)) * geo::any_orthogonal(n);
  return (geo::rotation_about(axis, angle) * n).normalized();
}

inline Vec3 random_unit(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * num::kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace detail

struct GeneratedClip {
  ClipBundle bundle;
  GroundTruthRecord gt;
};

namespace detail {

inline GeneratedClip generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const RoomSpec& room = spec.room;

  ClipBundle b;
  b.clip_id = spec.clip_id;
  b.scene_id = spec.scene_id;
  b.intrinsics.fx = spec.image.fx;
  b.intrinsics.fy = spec.image.fy;
  b.intrinsics.cx = spec.image.width / 2.0;
  b.intrinsics.cy = spec.image.height / 2.0;
  b.intrinsics.width = spec.image.width;
  b.intrinsics.height = spec.image.height;

  // --- ground-truth articulation and contact path -------------------------
  GroundTruthRecord gt;
  gt.clip_id = spec.clip_id;
  gt.scene_id = spec.scene_id;
  gt.motion_type = spec.type;

  const Vec3 wall_out(0.0, -1.0, 0.0);  // inward normal of the fixture wall
  const double hx = spec.fixture_x;
  std::vector<Vec3> contact_path;  // noiseless contact points, one per contact frame
  const int n_pre = std::max(3, spec.frames / 8);
  const int n_post = std::max(3, spec.frames / 10);
  const int n_contact = spec.frames - n_pre - n_post;
  if (n_contact < 6) throw Error("synthetic spec: too few contact frames");

  Vec3 fixture_center;
  std::vector<detail::Edge3D> edges;
  if (spec.type == MotionType::revolute) {
    const Vec3 axis = spec.horizontal_hinge ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
    Vec3 hinge_point;  // pivot on the hinge line at handle height
    Vec3 u_wall;       // unit, in the wall plane, orthogonal to the axis
    if (spec.horizontal_hinge) {
      const double hinge_z = std::max(0.15, spec.handle_z - spec.radius);
      hinge_point = Vec3(hx, room.depth, hinge_z);
      u_wall = Vec3(0, 0, 1);
      edges.push_back({Vec3(hx - 0.45, room.depth, hinge_z), Vec3(hx + 0.45, room.depth, hinge_z), 0});
    } else {
      hinge_point = Vec3(hx, room.depth, spec.handle_z);
      u_wall = Vec3(hx < room.width / 2.0 ? 1.0 : -1.0, 0.0, 0.0);
      const double z0 = std::max(0.05, spec.handle_z - 0.8);
      const double z1 = std::min(room.height - 0.05, spec.handle_z + 0.8);
      edges.push_back({Vec3(hx, room.depth, z0), Vec3(hx, room.depth, z1), 0});
    }
    gt.axis = axis;
    gt.origin = hinge_point;
    fixture_center = hinge_point + 0.5 * spec.radius * u_wall;

    const double theta0 = num::deg2rad(5.0);
    const double arc = num::deg2rad(spec.arc_deg);
    for (int i = 0; i < n_contact; ++i) {
      const double th = theta0 + arc * i / (n_contact - 1);
      contact_path.push_back(hinge_point +
                             spec.radius * (std::cos(th) * u_wall + std::sin(th) * wall_out));
    }
  } else {
    const Vec3 start(hx, room.depth - 0.02, spec.handle_z);
    const Vec3 dir = spec.slide_axis == 0 ? Vec3(1, 0, 0) : wall_out;
    gt.axis = dir.cwiseAbs();  // undirected convention for ground truth
    gt.origin = start;
    fixture_center = Vec3(hx, room.depth, spec.handle_z);
    for (int i = 0; i < n_contact; ++i)
      contact_path.push_back(start + spec.extent * i / (n_contact - 1) * dir);
    // Drawer front edges (move with the drawer in reality; modeled static
    // at the closed pose, they are distractor-grade for prismatic clips).
    edges.push_back({Vec3(hx - 0.25, room.depth, spec.handle_z + 0.12),
                     Vec3(hx + 0.25, room.depth, spec.handle_z + 0.12), 0});
  }

  // Distractor edges on the room planes, Manhattan-aligned.
  {
    std::vector<detail::Edge3D> pool;
    const double cz = 0.9;  // countertop height
    pool.push_back({Vec3(std::max(0.2, hx - 1.5), room.depth, cz),
                    Vec3(std::min(room.width - 0.2, hx + 1.5), room.depth, cz), 0});
    pool.push_back({Vec3(0.0, room.depth, 0.2), Vec3(0.0, room.depth, room.height - 0.2), 0});
    pool.push_back({Vec3(room.width, room.depth, 0.2), Vec3(room.width, room.depth, room.height - 0.2), 0});
    pool.push_back({Vec3(0.3, room.depth, 0.0), Vec3(room.width - 0.3, room.depth, 0.0), 0});
    pool.push_back({Vec3(std::max(0.2, hx - 1.2), room.depth, 1.8),
                    Vec3(std::min(room.width - 0.2, hx + 1.2), room.depth, 1.8), 0});
    const double vx = hx < room.width / 2.0 ? std::min(room.width - 0.1, hx + 1.1)
                                            : std::max(0.1, hx - 1.1);
    pool.push_back({Vec3(vx, room.depth, 0.3), Vec3(vx, room.depth, room.height - 0.3), 0});
    for (int i = 0; i < spec.distractors && i < static_cast<int>(pool.size()); ++i)
      edges.push_back(pool[i]);
    for (size_t i = 0; i < edges.size(); ++i) edges[i].id = static_cast<int>(i);
  }

  // --- camera orbit --------------------------------------------------------
  const double alpha_span = num::deg2rad(70.0);
  for (int f = 0; f < spec.frames; ++f) {
    const double a = -0.5 * alpha_span + alpha_span * f / std::max(1, spec.frames - 1);
    Vec3 eye = fixture_center +
               spec.camera_distance * Vec3(std::sin(a), -std::cos(a), 0.0) +
               Vec3(0.0, 0.0, 0.15 * std::sin(2.0 * a) + 0.1);
    eye.x() = std::clamp(eye.x(), 0.2, room.width - 0.2);
    eye.y() = std::clamp(eye.y(), 0.2, room.depth - 0.2);
    eye.z() = std::clamp(eye.z(), 0.3, room.height - 0.2);
    b.poses.push_back(detail::look_at(eye, fixture_center));
    b.frames.push_back({f, f / spec.fps});
  }

  // Feasibility: the fixture must stay visible from most of the path.
  {
    int visible = 0;
    for (const auto& p : b.poses) {
      const Vec3 pc = p.to_camera(fixture_center);
      if (pc.z() > 0.05 && b.intrinsics.inside(b.intrinsics.project(pc))) ++visible;
    }
    if (visible < spec.frames / 2)
      throw Error("infeasible geometry: fixture leaves the camera view");
  }

  // --- fingertips -----------------------------------------------------------
  // Zero-sum tip offsets keep the mean at the contact point.
  const Vec3 off1(0.015, 0.0, 0.01);
  const Vec3 off2(-0.0075, 0.013, -0.01);
  const Vec3 off3(-0.0075, -0.013, 0.0);
  const Vec3 approach = contact_path.front() + Vec3(0.05, -0.25, -0.08);
  const Vec3 retreat = contact_path.back() + Vec3(-0.06, -0.22, 0.1);
  for (int f = 0; f < spec.frames; ++f) {
    FingertipObservation obs;
    obs.timestamp = f / spec.fps;
    Vec3 p;
    if (f < n_pre) {
      const double t = static_cast<double>(f) / n_pre;
      p = approach + t * (contact_path.front() - approach);
      obs.contact = false;
    } else if (f < n_pre + n_contact) {
      p = contact_path[f - n_pre];
      obs.contact = true;
    } else {
      const double t = static_cast<double>(f - n_pre - n_contact + 1) / n_post;
      p = contact_path.back() + t * (retreat - contact_path.back());
      obs.contact = false;
    }
    const Vec3 noise(spec.noise.traj_sigma * rng.normal(), spec.noise.traj_sigma * rng.normal(),
                     spec.noise.traj_sigma * rng.normal());
    obs.thumb = p + noise + off1;
    obs.index = p + noise + off2;
    obs.middle = p + noise + off3;
    b.fingertips.push_back(obs);
  }

  // --- depth maps, masks, normals -------------------------------------------
  const int w = spec.image.width, h = spec.image.height;
  for (int f = 0; f < spec.frames; ++f) {
    const CameraPose& pose = b.poses[f];
    DepthMap d;
    d.width = w;
    d.height = h;
    d.values.resize(static_cast<size_t>(w) * h);
    Mask mask;
    if (spec.emit_masks) {
      mask.width = w;
      mask.height = h;
      mask.values.assign(static_cast<size_t>(w) * h, 0);
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Vec3 dir_cam((x - b.intrinsics.cx) / b.intrinsics.fx,
                           (y - b.intrinsics.cy) / b.intrinsics.fy, 1.0);
        const Vec3 dir_world = pose.rotation * dir_cam;
        const auto hit = detail::raycast_room(room, pose.translation, dir_world);
        float depth = std::numeric_limits<float>::quiet_NaN();
        if (hit) {
          double z = hit->depth;
          if (spec.noise.depth_sigma > 0.0) z += spec.noise.depth_sigma * rng.normal();
          depth = static_cast<float>(std::max(0.01, z));
          if (spec.emit_masks) {
            const Vec3 pw = pose.translation + hit->depth * dir_world;
            const bool on_wall = std::abs(pw.y() - room.depth) < 1e-6;
            if (on_wall && std::abs(pw.x() - hx) < 0.55 &&
                std::abs(pw.z() - spec.handle_z) < 0.75)
              mask.values[static_cast<size_t>(y) * w + x] = 255;
          }
        }
        d.values[static_cast<size_t>(y) * w + x] = depth;
      }
    }
    b.depth.emplace(f, std::move(d));
    if (spec.emit_masks) b.masks.emplace(f, std::move(mask));

    // Surface-normal samples in the camera frame.
    for (int s = 0; s < spec.normals_per_frame; ++s) {
      const int px = static_cast<int>(rng.uniform_index(w));
      const int py = static_cast<int>(rng.uniform_index(h));
      const Vec3 dir_cam((px - b.intrinsics.cx) / b.intrinsics.fx,
                         (py - b.intrinsics.cy) / b.intrinsics.fy, 1.0);
      const Vec3 dir_world = pose.rotation * dir_cam;
      const auto hit = detail::raycast_room(room, pose.translation, dir_world);
      if (!hit) continue;
      Vec3 n_world = hit->normal_world;
      if (rng.uniform() < spec.noise.outlier_fraction)
        n_world = detail::random_unit(rng);
      else if (spec.noise.normal_jitter_deg > 0.0)
        n_world = detail::jitter_direction(n_world, spec.noise.normal_jitter_deg, rng);
      b.normals.push_back({(pose.rotation.transpose() * n_world).normalized(), f});
    }
  }

  // --- 2D line detections -----------------------------------------------------
  for (int f = 0; f < spec.frames; ++f) {
    const CameraPose& pose = b.poses[f];
    for (const auto& e : edges) {
      Vec3 a_cam = pose.to_camera(e.a);
      Vec3 b_cam = pose.to_camera(e.b);
      // Clip to the camera front.
      const double znear = 0.05;
      if (a_cam.z() <= znear && b_cam.z() <= znear) continue;
      if (a_cam.z() <= znear || b_cam.z() <= znear) {
        const double t = (znear - a_cam.z()) / (b_cam.z() - a_cam.z());
        const Vec3 cut = a_cam + t * (b_cam - a_cam);
        (a_cam.z() <= znear ? a_cam : b_cam) = cut;
      }
      const auto clipped = detail::clip_to_image(b.intrinsics.project(a_cam),
                                                 b.intrinsics.project(b_cam), w, h);
      if (!clipped) continue;
      if ((clipped->first - clipped->second).norm() < 6.0) continue;
      LineSegment2D seg;
      seg.p0 = clipped->first;
      seg.p1 = clipped->second;
      seg.frame = f;
      seg.correspondence = e.id;
      b.lines.push_back(seg);
    }
  }

  // --- derived point cloud -----------------------------------------------------
  PointCloud cloud;
  for (int f = 0; f < spec.frames; ++f) {
    const CameraPose& pose = b.poses[f];
    const DepthMap& d = b.depth.at(f);
    for (int y = spec.cloud_stride / 2; y < h; y += spec.cloud_stride) {
      for (int x = spec.cloud_stride / 2; x < w; x += spec.cloud_stride) {
        if (!d.valid(x, y)) continue;
        cloud.points.push_back(pose.to_world(b.intrinsics.unproject(x, y, d.at(x, y))));
        cloud.frame_ids.push_back(f);
      }
    }
  }
  b.cloud = std::move(cloud);

  GeneratedClip out;
  out.bundle = std::move(b);
  out.gt = gt;
  return out;
}

}  // namespace detail

inline GeneratedClip gen_revolute_clip(const SyntheticSpec& spec) {
  if (spec.type != MotionType::revolute) throw Error("gen_revolute_clip: spec.type mismatch");
  return detail::generate(spec);
}

inline GeneratedClip gen_prismatic_clip(const SyntheticSpec& spec) {
  if (spec.type != MotionType::prismatic) throw Error("gen_prismatic_clip: spec.type mismatch");
  return detail::generate(spec);
}

/// Ideal per-frame votes derived from the ground truth, standing in for an
/// external reasoner when running fully synthetic experiments.
inline reason::InjectionRecord make_oracle_reasoner(const GroundTruthRecord& gt, int k_frames,
                                                    int total_frames) {
  reason::InjectionRecord rec;
  rec.clip_id = gt.clip_id;
  for (int i = 0; i < k_frames; ++i) {
    reason::FrameVote v;
    v.frame = total_frames <= 1 ? 0 : static_cast<int>((total_frames - 1) * static_cast<long>(i) / std::max(1, k_frames - 1));
    v.furniture = gt.motion_type == MotionType::revolute ? "cupboard" : "drawer";
    v.motion = gt.motion_type == MotionType::revolute ? reason::VoteLabel::rotation
                                                      : reason::VoteLabel::translation;
    rec.votes.push_back(v);
  }
  return rec;
}

struct BruteForceAxis {
  Line3D axis;
  double objective = 0.0;  // radius variance at the optimum
  bool ill_conditioned = false;
};

/// Exhaustive search over a hemisphere grid of directions and an in-plane
/// grid of axis positions, minimizing the radius variance
/// (1/n) sum (d_t - mean d)^2. Guaranteed within grid resolution of the
/// global optimum for axes passing within `max_radius` of the centroid.
inline BruteForceAxis brute_force_axis(std::span<const Vec3> points, double dir_step_deg,
                                       double pos_step_m, double max_radius = 1.0) {
  if (points.size() < 3) throw Error("brute_force_axis: at least 3 points required");
  if (!(dir_step_deg > 0.0) || !(pos_step_m > 0.0))
    throw Error("brute_force_axis: steps must be > 0");

  const size_t n = points.size();
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(n);

  // Collinear data leaves the objective flat in the position along the line.
  bool ill = false;
  {
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
      const Vec3 d = p - centroid;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    if (es.eigenvalues()[1] / static_cast<double>(n) < 1e-12) ill = true;
  }

  std::vector<double> qx(n), qy(n);
  const int m = static_cast<int>(std::ceil(max_radius / pos_step_m));
  double best_obj = std::numeric_limits<double>::infinity();
  Vec3 best_dir = Vec3::UnitZ();
  Vec3 best_point = centroid;

  for (double theta = 0.0; theta <= 90.0 + 1e-9; theta += dir_step_deg) {
    const double th = num::deg2rad(theta);
    const int n_phi = theta < 1e-9 ? 1 : static_cast<int>(std::ceil(360.0 / dir_step_deg));
    for (int pi = 0; pi < n_phi; ++pi) {
      const double phi = num::deg2rad(pi * dir_step_deg);
      const Vec3 u(std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th));
      const Vec3 e1 = geo::any_orthogonal(u);
      const Vec3 e2 = u.cross(e1);
      double sx = 0.0, sy = 0.0, s2 = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const Vec3 d = points[i] - centroid;
        qx[i] = d.dot(e1);
        qy[i] = d.dot(e2);
        sx += qx[i];
        sy += qy[i];
        s2 += qx[i] * qx[i] + qy[i] * qy[i];
      }
      for (int gi = -m; gi <= m; ++gi) {
        const double cx = gi * pos_step_m;
        for (int gj = -m; gj <= m; ++gj) {
          const double cy = gj * pos_step_m;
          // E[d^2] in closed form; only E[d] needs the sqrt loop.
          const double e_d2 =
              (s2 - 2.0 * (cx * sx + cy * sy)) / static_cast<double>(n) + cx * cx + cy * cy;
          double sd = 0.0;
          for (size_t i = 0; i < n; ++i) {
            const double dx = qx[i] - cx;
            const double dy = qy[i] - cy;
            sd += std::sqrt(dx * dx + dy * dy);
          }
          const double e_d = sd / static_cast<double>(n);
          const double var = e_d2 - e_d * e_d;
          if (var < best_obj) {
            best_obj = var;
            best_dir = u;
            best_point = centroid + cx * e1 + cy * e2;
          }
        }
      }
    }
  }

  BruteForceAxis out;
  out.axis.direction = geo::canonical_sign_first(best_dir);
  out.axis.origin = best_point;
  out.objective = std::max(0.0, best_obj);
  out.ill_conditioned = ill;
  return out;
}

/// Applies a rigid motion to everything world-frame in a bundle (poses,
/// fingertips, cloud); camera-frame streams are untouched.
inline ClipBundle transform_bundle(const ClipBundle& in, const Mat3& r, const Vec3& t) {
  ClipBundle b = in;
  for (auto& p : b.poses) {
    p.rotation = r * p.rotation;
    p.translation = r * p.translation + t;
  }
  for (auto& o : b.fingertips) {
    o.thumb = r * o.thumb + t;
    o.index = r * o.index + t;
    o.middle = r * o.middle + t;
  }
  if (b.cloud)
    for (auto& p : b.cloud->points) p = r * p + t;
  return b;
}

inline GroundTruthRecord transform_gt(const GroundTruthRecord& in, const Mat3& r, const Vec3& t) {
  GroundTruthRecord g = in;
  g.axis = (r * in.axis).normalized();
  g.origin = r * in.origin + t;
  return g;
}

}  // namespace artikit::synth
