#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "artikit/geometry.hpp"

namespace artikit {

using geo::Mat3;
using geo::Vec2;
using geo::Vec3;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Hard failure: missing files, schema mismatches, violated invariants,
/// broken preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recoverable domain outcome: a clip that yields no estimate (no contact,
/// no plausible axis, unresolved motion type). Pipelines report these as
/// rejections, not errors.
class Rejection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MotionType { prismatic, revolute };

inline std::string to_string(MotionType t) {
  return t == MotionType::prismatic ? "prismatic" : "revolute";
}

inline MotionType motion_type_from_string(const std::string& s) {
  if (s == "prismatic") return MotionType::prismatic;
  if (s == "revolute") return MotionType::revolute;
  throw Error("invariant violation: motion_type '" + s + "'");
}

/// Camera-to-world pose.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();   // camera-to-world
  Vec3 translation = Vec3::Zero();    // camera center in world, meters

  Vec3 to_world(const Vec3& p_cam) const { return rotation * p_cam + translation; }
  Vec3 to_camera(const Vec3& p_world) const { return rotation.transpose() * (p_world - translation); }
};

struct Intrinsics {
  double fx = 0.0, fy = 0.0;  // pixels
  double cx = 0.0, cy = 0.0;  // pixels
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw Error("invariant violation: intrinsics focal lengths");
    if (!(cx >= 0.0 && cx < width)) throw Error("invariant violation: intrinsics cx");
    if (!(cy >= 0.0 && cy < height)) throw Error("invariant violation: intrinsics cy");
  }

  /// Pixel + z-depth -> camera-frame point.
  Vec3 unproject(double u, double v, double depth) const {
    return {depth * (u - cx) / fx, depth * (v - cy) / fy, depth};
  }

  /// Camera-frame point -> pixel. Caller checks z > 0.
  Vec2 project(const Vec3& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }

  bool inside(const Vec2& px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
  }
};

/// Metric depth map, row-major float32. Entries that are non-finite or <= 0
/// are invalid.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> values;

  float at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  bool valid(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    const float d = at(x, y);
    return std::isfinite(d) && d > 0.0f;
  }
};

/// 1 byte per pixel, 0 or 255.
struct Mask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> values;

  bool positive(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    return values[static_cast<size_t>(y) * width + x] != 0;
  }
  bool empty_mask() const {
    for (const auto v : values)
      if (v) return false;
    return true;
  }
};

/// Surface normal sample, camera frame, unit.
struct NormalSample {
  Vec3 normal = Vec3::UnitZ();
  int frame = 0;
};
using NormalSampleSet = std::vector<NormalSample>;

struct LineSegment2D {
  Vec2 p0 = Vec2::Zero();
  Vec2 p1 = Vec2::Zero();
  int frame = 0;
  std::optional<int> correspondence;  // groups matched segments across views
};

struct FingertipObservation {
  double timestamp = 0.0;  // seconds
  Vec3 thumb = Vec3::Zero();
  Vec3 index = Vec3::Zero();
  Vec3 middle = Vec3::Zero();
  bool contact = false;
};

/// The output triple: motion type, unit axis, origin point.
struct Articulation {
  MotionType motion_type = MotionType::prismatic;
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();

  void validate() const {
    if (std::abs(axis.norm() - 1.0) > 1e-9) throw Error("invariant violation: articulation axis norm");
  }
};

/// 3D line candidate: unit direction (canonical sign), a point on the line,
/// and support statistics from the robust fit.
struct Line3D {
  Vec3 direction = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();
  int support = 0;              // inlier point count
  double inlier_rate = 0.0;     // support / track size
  double projected_length = 0.0;  // inlier extent along direction, meters
};

struct GroundTruthRecord {
  std::string clip_id;
  std::string scene_id = "scene0";
  MotionType motion_type = MotionType::prismatic;
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();
};

}  // namespace artikit
