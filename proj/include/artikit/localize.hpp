#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "artikit/bundle.hpp"
#include "artikit/config.hpp"
#include "artikit/types.hpp"

namespace artikit::loc {

struct VoxelIndex {
  int x = 0, y = 0, z = 0;
  bool operator==(const VoxelIndex&) const = default;
};

struct VoxelIndexHash {
  size_t operator()(const VoxelIndex& v) const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const int c : {v.x, v.y, v.z}) {
      h ^= static_cast<std::uint32_t>(c);
      h *= 0x100000001B3ull;
    }
    return static_cast<size_t>(h);
  }
};

/// Voxel grid whose per-voxel count n_v is the number of distinct source
/// frames contributing at least one point.
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.05;
  std::unordered_map<VoxelIndex, int, VoxelIndexHash> counts;

  VoxelIndex index_of(const Vec3& p) const {
    const Vec3 q = (p - origin) / voxel_size;
    return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
            static_cast<int>(std::floor(q.z()))};
  }
  Vec3 center_of(const VoxelIndex& i) const {
    return origin + voxel_size * Vec3(i.x + 0.5, i.y + 0.5, i.z + 0.5);
  }
};

/// Voxels with n_v > min_views, plus their axis-aligned bounds.
struct ConfidentRegion {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.05;
  std::vector<VoxelIndex> indices;  // sorted lexicographically
  Vec3 bounds_min = Vec3::Zero();
  Vec3 bounds_max = Vec3::Zero();

  bool empty() const { return indices.empty(); }
  Vec3 center_of(const VoxelIndex& i) const {
    return origin + voxel_size * Vec3(i.x + 0.5, i.y + 0.5, i.z + 0.5);
  }
};

inline VoxelGrid build_voxel_grid(const PointCloud& cloud, const Config& cfg) {
  if (cloud.points.empty()) throw Error("build_voxel_grid: empty cloud");
  VoxelGrid g;
  g.voxel_size = cfg.voxel_size;
  Vec3 mn = cloud.points[0];
  for (const auto& p : cloud.points) mn = mn.cwiseMin(p);
  g.origin = mn;
  std::unordered_map<VoxelIndex, std::unordered_set<int>, VoxelIndexHash> sources;
  for (size_t i = 0; i < cloud.points.size(); ++i)
    sources[g.index_of(cloud.points[i])].insert(cloud.frame_ids[i]);
  for (const auto& [idx, frames] : sources) g.counts[idx] = static_cast<int>(frames.size());
  return g;
}

inline ConfidentRegion extract_confident(const VoxelGrid& g, const Config& cfg) {
  ConfidentRegion r;
  r.origin = g.origin;
  r.voxel_size = g.voxel_size;
  for (const auto& [idx, n] : g.counts)
    if (n > cfg.min_views) r.indices.push_back(idx);  // strict >
  std::sort(r.indices.begin(), r.indices.end(), [](const VoxelIndex& a, const VoxelIndex& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
  });
  if (!r.indices.empty()) {
    r.bounds_min = r.bounds_max = r.center_of(r.indices[0]);
    for (const auto& i : r.indices) {
      const Vec3 c = r.center_of(i);
      r.bounds_min = r.bounds_min.cwiseMin(c - Vec3::Constant(0.5 * g.voxel_size));
      r.bounds_max = r.bounds_max.cwiseMax(c + Vec3::Constant(0.5 * g.voxel_size));
    }
  }
  return r;
}

/// A frame is retained iff at least one confident-voxel center projects
/// inside the image with camera depth in (near, far).
inline std::vector<int> frustum_filter(std::span<const CameraPose> poses, const Intrinsics& intr,
                                       const ConfidentRegion& region,
                                       std::pair<double, double> depth_range) {
  if (region.empty()) throw Error("frustum_filter: empty region");
  std::vector<int> retained;
  for (size_t f = 0; f < poses.size(); ++f) {
    for (const auto& idx : region.indices) {
      const Vec3 pc = poses[f].to_camera(region.center_of(idx));
      if (pc.z() <= depth_range.first || pc.z() >= depth_range.second) continue;
      if (intr.inside(intr.project(pc))) {
        retained.push_back(static_cast<int>(f));
        break;
      }
    }
  }
  return retained;
}

/// Greedy farthest point sampling over camera centers. The seed is the
/// candidate farthest from the candidate centroid; ties break to the lower
/// frame index. Returns min(n, |candidates|) indices in selection order.
inline std::vector<int> select_views_fps(std::span<const int> candidates,
                                         std::span<const CameraPose> poses, int n) {
  if (candidates.empty()) return {};
  const size_t m = candidates.size();
  Vec3 centroid = Vec3::Zero();
  for (const int c : candidates) centroid += poses[c].translation;
  centroid /= static_cast<double>(m);

  std::vector<char> used(m, 0);
  size_t seed = 0;
  double best = -1.0;
  for (size_t i = 0; i < m; ++i) {
    const double d = (poses[candidates[i]].translation - centroid).norm();
    if (d > best) {
      best = d;
      seed = i;
    }
  }
  std::vector<int> selected{candidates[seed]};
  used[seed] = 1;
  std::vector<double> min_dist(m, std::numeric_limits<double>::infinity());
  while (selected.size() < static_cast<size_t>(n) && selected.size() < m) {
    const Vec3 last = poses[selected.back()].translation;
    size_t far_i = m;
    double far_d = -1.0;
    for (size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      min_dist[i] = std::min(min_dist[i], (poses[candidates[i]].translation - last).norm());
      if (min_dist[i] > far_d) {
        far_d = min_dist[i];
        far_i = i;
      }
    }
    if (far_i == m) break;
    used[far_i] = 1;
    selected.push_back(candidates[far_i]);
  }
  return selected;
}

/// Local interaction frames: frames owning contact observations, uniformly
/// strided down to n_local. An injected reasoner record may override this.
inline std::vector<int> select_local_frames(const ClipBundle& b, const Config& cfg) {
  std::vector<int> contact_frames;
  for (size_t i = 0; i < b.fingertips.size() && i < b.frames.size(); ++i)
    if (b.fingertips[i].contact) contact_frames.push_back(b.frames[i].index);
  if (contact_frames.empty())
    for (const auto& f : b.frames) contact_frames.push_back(f.index);
  if (static_cast<int>(contact_frames.size()) <= cfg.n_local) return contact_frames;
  std::vector<int> out;
  const size_t m = contact_frames.size();
  for (int i = 0; i < cfg.n_local; ++i) {
    const size_t j = (m - 1) * static_cast<size_t>(i) / (cfg.n_local - 1);
    if (out.empty() || contact_frames[j] != out.back()) out.push_back(contact_frames[j]);
  }
  return out;
}

/// Derives a point cloud from the bundle's depth maps (used when no
/// externally reconstructed cloud is provided). Pixels are sampled on a
/// regular stride; points carry their source frame id.
inline PointCloud cloud_from_depth(const ClipBundle& b, int stride = 4) {
  PointCloud cloud;
  for (const auto& f : b.frames) {
    const auto it = b.depth.find(f.index);
    if (it == b.depth.end()) continue;
    const DepthMap& d = it->second;
    const CameraPose& pose = b.pose_of(f.index);
    for (int y = stride / 2; y < d.height; y += stride) {
      for (int x = stride / 2; x < d.width; x += stride) {
        if (!d.valid(x, y)) continue;
        const Vec3 pc = b.intrinsics.unproject(x, y, d.at(x, y));
        cloud.points.push_back(pose.to_world(pc));
        cloud.frame_ids.push_back(f.index);
      }
    }
  }
  return cloud;
}

/// Removes cloud points that project onto mask-negative pixels of their own
/// source frame. Points from frames without a mask are kept.
inline PointCloud mask_filter_cloud(const PointCloud& cloud, const ClipBundle& b) {
  if (b.masks.empty()) return cloud;
  PointCloud out;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const int fid = cloud.frame_ids[i];
    const auto it = b.masks.find(fid);
    bool keep = true;
    if (it != b.masks.end()) {
      const Vec3 pc = b.pose_of(fid).to_camera(cloud.points[i]);
      keep = false;
      if (pc.z() > 0.0) {
        const Vec2 px = b.intrinsics.project(pc);
        keep = it->second.positive(static_cast<int>(std::lround(px.x())),
                                   static_cast<int>(std::lround(px.y())));
      }
    }
    if (keep) {
      out.points.push_back(cloud.points[i]);
      out.frame_ids.push_back(fid);
    }
  }
  return out;
}

/// Restricts a cloud to points observed from the given source frames.
inline PointCloud restrict_to_frames(const PointCloud& cloud, std::span<const int> frames) {
  std::unordered_set<int> keep(frames.begin(), frames.end());
  PointCloud out;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    if (keep.count(cloud.frame_ids[i])) {
      out.points.push_back(cloud.points[i]);
      out.frame_ids.push_back(cloud.frame_ids[i]);
    }
  }
  return out;
}

}  // namespace artikit::loc
