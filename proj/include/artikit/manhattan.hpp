#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "artikit/config.hpp"
#include "artikit/geometry.hpp"
#include "artikit/rng.hpp"
#include "artikit/types.hpp"

namespace artikit::manhattan {

/// Three mutually near-orthogonal world directions, orthonormalized and
/// ordered by support.
struct ManhattanFrame {
  Vec3 m1 = Vec3::UnitX();
  Vec3 m2 = Vec3::UnitY();
  Vec3 m3 = Vec3::UnitZ();
  double orthogonality_residual = 0.0;        // max |mi . mj| before Gram-Schmidt
  std::array<double, 3> support = {0, 0, 0};  // pooled-sample fraction per axis

  Vec3 axis(int i) const { return i == 0 ? m1 : (i == 1 ? m2 : m3); }
};

struct WeightedDir {
  Vec3 dir = Vec3::UnitZ();
  int weight = 0;
};

/// Per-frame triad of dominant directions (camera frame until rotated).
struct Triad {
  Vec3 m1, m2, m3;
};

/// k-means over unit normals. Antipodes are folded first (dominant
/// component made positive); centroids are renormalized every update and
/// empty clusters are dropped. k-means++ seeding makes the result
/// deterministic for a given seed.
inline std::vector<WeightedDir> cluster_normals(std::span<const NormalSample> samples, int k,
                                                std::uint64_t seed) {
  if (static_cast<int>(samples.size()) < k)
    throw Error("cluster_normals: fewer samples than clusters");
  std::vector<Vec3> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back(geo::canonical_sign_dominant(s.normal));

  Rng rng(seed);
  const size_t n = pts.size();

  // k-means++ initialization.
  std::vector<Vec3> centroids;
  centroids.push_back(pts[rng.uniform_index(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, (pts[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    if (total <= 1e-18) {
      centroids.push_back(pts[rng.uniform_index(n)]);
      continue;
    }
    double target = rng.uniform() * total;
    size_t pick = n - 1;
    for (size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    centroids.push_back(pts[pick]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < centroids.size(); ++c) {
        const double d = (pts[i] - centroids[c]).squaredNorm();
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      if (assign[i] != best_c) {
        assign[i] = best_c;
        changed = true;
      }
    }
    std::vector<Vec3> sums(centroids.size(), Vec3::Zero());
    std::vector<int> counts(centroids.size(), 0);
    for (size_t i = 0; i < n; ++i) {
      sums[assign[i]] += pts[i];
      ++counts[assign[i]];
    }
    for (size_t c = 0; c < centroids.size(); ++c)
      if (counts[c] > 0 && sums[c].norm() > 1e-12) centroids[c] = sums[c].normalized();
    if (!changed) break;
  }

  std::vector<int> counts(centroids.size(), 0);
  for (size_t i = 0; i < n; ++i) ++counts[assign[i]];
  std::vector<WeightedDir> out;
  for (size_t c = 0; c < centroids.size(); ++c)
    if (counts[c] > 0) out.push_back({centroids[c], counts[c]});  // empty clusters dropped
  std::stable_sort(out.begin(), out.end(),
                   [](const WeightedDir& a, const WeightedDir& b) { return a.weight > b.weight; });
  return out;
}

/// Builds one frame's triad: m1 is the highest-weight centroid; the pair
/// (cs, ct) minimizing |cs.m1| + |m1.ct| + |cs.ct| is found by exhaustive
/// search over the remaining centroids, then the triad is orthonormalized
/// by projecting cs off m1 and ct off both.
inline Triad frame_from_clusters(std::span<const WeightedDir> centroids) {
  if (centroids.size() < 3) throw Error("frame_from_clusters: at least 3 centroids required");
  size_t top = 0;
  for (size_t i = 1; i < centroids.size(); ++i)
    if (centroids[i].weight > centroids[top].weight) top = i;
  const Vec3 m1 = centroids[top].dir.normalized();

  double best = std::numeric_limits<double>::infinity();
  size_t bs = 0, bt = 0;
  for (size_t s = 0; s < centroids.size(); ++s) {
    if (s == top) continue;
    for (size_t t = s + 1; t < centroids.size(); ++t) {
      if (t == top) continue;
      const Vec3& cs = centroids[s].dir;
      const Vec3& ct = centroids[t].dir;
      const double obj = std::abs(cs.dot(m1)) + std::abs(m1.dot(ct)) + std::abs(cs.dot(ct));
      if (obj < best) {
        best = obj;
        bs = s;
        bt = t;
      }
    }
  }
  Vec3 m2 = centroids[bs].dir - centroids[bs].dir.dot(m1) * m1;
  if (m2.norm() < 1e-9) throw Error("frame_from_clusters: degenerate centroid pair");
  m2.normalize();
  Vec3 m3 = centroids[bt].dir - centroids[bt].dir.dot(m1) * m1 - centroids[bt].dir.dot(m2) * m2;
  if (m3.norm() < 1e-9) throw Error("frame_from_clusters: degenerate centroid pair");
  m3.normalize();
  return {m1, m2, m3};
}

namespace detail {

struct Mode {
  Vec3 dir;
  int weight;
};

/// Flat-kernel mean shift on the axial sphere: iterate the sign-aligned
/// mean of samples within the cosine-distance bandwidth.
inline std::vector<Mode> mean_shift_modes(std::span<const Vec3> dirs, double bandwidth) {
  std::vector<Mode> modes;
  for (const auto& start : dirs) {
    Vec3 x = start;
    for (int iter = 0; iter < 200; ++iter) {
      Vec3 sum = Vec3::Zero();
      for (const auto& y : dirs) {
        Vec3 a = y;
        if (a.dot(x) < 0.0) a = -a;
        if (1.0 - a.dot(x) <= bandwidth) sum += a;
      }
      if (sum.norm() < 1e-12) break;
      const Vec3 next = sum.normalized();
      const double move = 1.0 - std::abs(next.dot(x));
      x = next;
      if (move < 1e-14) break;
    }
    bool merged = false;
    for (auto& m : modes) {
      if (1.0 - std::abs(m.dir.dot(x)) < 1e-6) {
        ++m.weight;
        merged = true;
        break;
      }
    }
    if (!merged) modes.push_back({geo::canonical_sign_dominant(x), 1});
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.weight > b.weight; });
  return modes;
}

}  // namespace detail

/// Pools per-frame triads (rotated to world through each frame's pose),
/// runs mean-shift over the pooled axial directions, takes the three
/// strongest modes subject to a mutual-angle constraint, and
/// orthonormalizes in mode-weight order.
inline ManhattanFrame aggregate_manhattan(std::span<const Triad> triads,
                                          std::span<const CameraPose> poses,
                                          const Config& cfg) {
  if (triads.empty() || triads.size() != poses.size())
    throw Error("aggregate_manhattan: one pose per triad required");
  std::vector<Vec3> pooled;
  pooled.reserve(3 * triads.size());
  for (size_t i = 0; i < triads.size(); ++i) {
    const Mat3& r = poses[i].rotation;
    pooled.push_back(geo::canonical_sign_dominant(r * triads[i].m1));
    pooled.push_back(geo::canonical_sign_dominant(r * triads[i].m2));
    pooled.push_back(geo::canonical_sign_dominant(r * triads[i].m3));
  }

  const auto modes = detail::mean_shift_modes(pooled, cfg.meanshift_bandwidth);
  const double min_angle = num::deg2rad(cfg.min_mode_angle);
  std::vector<detail::Mode> chosen;
  for (const auto& m : modes) {
    bool ok = true;
    for (const auto& c : chosen)
      if (geo::axis_angle(m.dir, c.dir) < min_angle) {
        ok = false;
        break;
      }
    if (ok) chosen.push_back(m);
    if (chosen.size() == 3) break;
  }
  if (chosen.size() < 3) throw Error("degenerate Manhattan structure");

  ManhattanFrame f;
  f.orthogonality_residual =
      std::max({std::abs(chosen[0].dir.dot(chosen[1].dir)), std::abs(chosen[0].dir.dot(chosen[2].dir)),
                std::abs(chosen[1].dir.dot(chosen[2].dir))});
  f.m1 = chosen[0].dir.normalized();
  Vec3 m2 = chosen[1].dir - chosen[1].dir.dot(f.m1) * f.m1;
  f.m2 = m2.normalized();
  Vec3 m3 = chosen[2].dir - chosen[2].dir.dot(f.m1) * f.m1 - chosen[2].dir.dot(f.m2) * f.m2;
  f.m3 = m3.normalized();
  const double total = static_cast<double>(pooled.size());
  for (int i = 0; i < 3; ++i) f.support[i] = static_cast<double>(chosen[i].weight) / total;
  return f;
}

/// Per-clip composition: per-frame k-means triads from the frames' normal
/// samples, aggregated across frames. Frames contributing fewer than
/// max(k, 3) samples are skipped.
inline ManhattanFrame estimate_manhattan(const NormalSampleSet& normals,
                                         std::span<const int> frame_ids,
                                         const std::vector<CameraPose>& poses_by_position,
                                         const std::function<int(int)>& frame_position,
                                         const Config& cfg, std::uint64_t seed) {
  std::vector<Triad> triads;
  std::vector<CameraPose> triad_poses;
  for (const int fid : frame_ids) {
    std::vector<NormalSample> frame_samples;
    for (const auto& s : normals)
      if (s.frame == fid) frame_samples.push_back(s);
    if (static_cast<int>(frame_samples.size()) < std::max(cfg.kmeans_k, 3)) continue;
    try {
      const auto centroids = cluster_normals(frame_samples, cfg.kmeans_k,
                                             derive_seed(seed, "kmeans" + std::to_string(fid)));
      if (centroids.size() < 3) continue;
      triads.push_back(frame_from_clusters(centroids));
      triad_poses.push_back(poses_by_position[frame_position(fid)]);
    } catch (const Error&) {
      continue;  // frame without usable normal structure
    }
  }
  if (triads.empty()) throw Error("degenerate Manhattan structure");
  return aggregate_manhattan(triads, triad_poses, cfg);
}

}  // namespace artikit::manhattan
