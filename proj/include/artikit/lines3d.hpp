#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "artikit/config.hpp"
#include "artikit/geometry.hpp"
#include "artikit/rng.hpp"
#include "artikit/types.hpp"

namespace artikit::lines {

/// World-frame 3D points lifted from matched 2D segments.
struct PointTrack {
  std::vector<Vec3> points;
  std::vector<int> views;  // contributing frame indices

  size_t size() const { return points.size(); }
};

namespace detail {

/// Total-least-squares line through a point set: principal component of the
/// centered covariance. Returns direction (canonical sign) and centroid.
inline std::pair<Vec3, Vec3> tls_line(std::span<const Vec3> pts) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 dir = geo::canonical_sign_first(es.eigenvectors().col(2).normalized());
  return {dir, centroid};
}

inline double median(std::vector<double> v) {
  const size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double m = v[n / 2];
  if (n % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    m = 0.5 * (m + v[n / 2 - 1]);
  }
  return m;
}

}  // namespace detail

/// Unprojects pixels sampled every `stride` px along a 2D segment through
/// the depth map into world coordinates. Samples whose depth deviates from
/// the segment's median depth by more than 3x MAD are dropped (depth
/// discontinuities along the detected line).
inline PointTrack unproject_line_samples(const LineSegment2D& seg, const DepthMap& depth,
                                         const Intrinsics& intr, const CameraPose& pose,
                                         int stride = 2) {
  if (stride <= 0) throw Error("unproject_line_samples: stride > 0 required");
  const Vec2 delta = seg.p1 - seg.p0;
  const double len = delta.norm();
  std::vector<Vec2> pixels;
  for (double s = 0.0; s <= len; s += stride) pixels.push_back(seg.p0 + (s / std::max(len, 1e-12)) * delta);
  if ((pixels.back() - seg.p1).norm() > 1e-9) pixels.push_back(seg.p1);

  std::vector<double> depths;
  std::vector<Vec2> valid_px;
  for (const auto& px : pixels) {
    const int x = static_cast<int>(std::lround(px.x()));
    const int y = static_cast<int>(std::lround(px.y()));
    if (!depth.valid(x, y)) continue;
    depths.push_back(depth.at(x, y));
    valid_px.push_back(px);
  }
  if (depths.size() < 2) throw Error("unproject_line_samples: fewer than 2 valid depth samples");

  const double med = detail::median(depths);
  std::vector<double> abs_dev(depths.size());
  for (size_t i = 0; i < depths.size(); ++i) abs_dev[i] = std::abs(depths[i] - med);
  const double mad = detail::median(abs_dev);

  PointTrack track;
  track.views.push_back(seg.frame);
  for (size_t i = 0; i < depths.size(); ++i) {
    if (std::abs(depths[i] - med) > 3.0 * mad + 1e-12) continue;
    const Vec3 pc = intr.unproject(valid_px[i].x(), valid_px[i].y(), depths[i]);
    track.points.push_back(pose.to_world(pc));
  }
  if (track.points.size() < 2) throw Error("unproject_line_samples: fewer than 2 valid depth samples");
  return track;
}

/// One PointTrack per correspondence id, concatenating all views' samples.
/// Segments without an id each form their own track. Tracks with fewer than
/// 2 points are dropped with a warning.
inline std::vector<PointTrack> merge_tracks_by_correspondence(
    std::span<const LineSegment2D> segments, std::span<const PointTrack> per_segment_tracks,
    std::vector<std::string>* warnings = nullptr) {
  if (segments.size() != per_segment_tracks.size())
    throw Error("merge_tracks_by_correspondence: segment/track count mismatch");
  std::vector<PointTrack> out;
  std::map<int, PointTrack> by_id;
  for (size_t i = 0; i < segments.size(); ++i) {
    const auto& t = per_segment_tracks[i];
    if (!segments[i].correspondence) {
      out.push_back(t);
      continue;
    }
    PointTrack& dst = by_id[*segments[i].correspondence];
    dst.points.insert(dst.points.end(), t.points.begin(), t.points.end());
    dst.views.insert(dst.views.end(), t.views.begin(), t.views.end());
  }
  for (auto& [id, t] : by_id) {
    if (t.points.size() < 2) {
      if (warnings)
        warnings->push_back("correspondence " + std::to_string(id) + " dropped: fewer than 2 points");
      continue;
    }
    out.push_back(std::move(t));
  }
  return out;
}

namespace detail {

struct LineModel {
  Vec3 direction = Vec3::UnitZ();
  Vec3 point = Vec3::Zero();
};

inline int count_inliers(std::span<const Vec3> pts, const LineModel& m, double tol,
                         std::vector<int>* idx = nullptr) {
  int n = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (geo::point_line_distance(pts[i], m.point, m.direction) <= tol) {
      ++n;
      if (idx) idx->push_back(static_cast<int>(i));
    }
  }
  return n;
}

inline double inlier_rms(std::span<const Vec3> pts, const LineModel& m, std::span<const int> idx) {
  double s = 0.0;
  for (const int i : idx) {
    const double d = geo::point_line_distance(pts[i], m.point, m.direction);
    s += d * d;
  }
  return idx.empty() ? 0.0 : std::sqrt(s / static_cast<double>(idx.size()));
}

}  // namespace detail

/// LO-RANSAC 3D line fit. Two-point minimal samples; local optimization is
/// a total-least-squares refit on the inlier set iterated to a fixed point
/// (at most 5 rounds) and never accepted if it loses inliers. Best model by
/// inlier count, ties by lower inlier RMS. Adaptive iteration count with
/// the (1 - w^2) stopping rule, capped at max_iters. Deterministic given
/// the seed.
inline Line3D fit_line_lo_ransac(const PointTrack& track, double tol, int max_iters,
                                 std::uint64_t seed) {
  const auto& pts = track.points;
  if (pts.size() < 2) throw Error("fit_line_lo_ransac: at least 2 points required");

  // Degenerate: no direction is defined if every point sits within tol of
  // one location.
  {
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    bool spread = false;
    for (const auto& p : pts)
      if ((p - centroid).norm() > tol) {
        spread = true;
        break;
      }
    if (!spread) throw Error("fit_line_lo_ransac: degenerate point set (no direction defined)");
  }

  Rng rng(seed);
  const size_t n = pts.size();
  detail::LineModel best;
  std::vector<int> best_inliers;
  double best_rms = std::numeric_limits<double>::infinity();

  auto consider = [&](const detail::LineModel& m) {
    std::vector<int> idx;
    detail::count_inliers(pts, m, tol, &idx);
    if (idx.size() < 2) return;
    const double rms = detail::inlier_rms(pts, m, idx);
    if (idx.size() > best_inliers.size() ||
        (idx.size() == best_inliers.size() && rms < best_rms)) {
      best = m;
      best_inliers = std::move(idx);
      best_rms = rms;
      // Local optimization: TLS refit on inliers, iterated; keep only
      // non-degrading refinements.
      for (int round = 0; round < 5; ++round) {
        std::vector<Vec3> sub;
        sub.reserve(best_inliers.size());
        for (const int i : best_inliers) sub.push_back(pts[i]);
        const auto [dir, centroid] = detail::tls_line(sub);
        detail::LineModel refit{dir, centroid};
        std::vector<int> refit_idx;
        detail::count_inliers(pts, refit, tol, &refit_idx);
        if (refit_idx.size() < best_inliers.size()) break;
        const double refit_rms = detail::inlier_rms(pts, refit, refit_idx);
        const bool same = refit_idx == best_inliers;
        if (refit_idx.size() == best_inliers.size() && refit_rms >= best_rms - 1e-15) break;
        best = refit;
        best_inliers = std::move(refit_idx);
        best_rms = refit_rms;
        if (same) break;
      }
    }
  };

  if (n == 2) {
    const Vec3 d = pts[1] - pts[0];
    if (d.norm() < 1e-12) throw Error("fit_line_lo_ransac: degenerate point set (no direction defined)");
    consider({d.normalized(), pts[0]});
  } else {
    int needed = max_iters;
    const int min_iters = 32;
    for (int iter = 0; iter < needed || iter < min_iters; ++iter) {
      if (iter >= max_iters) break;
      const size_t i = rng.uniform_index(n);
      size_t j = rng.uniform_index(n - 1);
      if (j >= i) ++j;
      const Vec3 d = pts[j] - pts[i];
      if (d.norm() < 1e-12) continue;
      consider({d.normalized(), pts[i]});
      if (!best_inliers.empty()) {
        const double w = static_cast<double>(best_inliers.size()) / static_cast<double>(n);
        const double denom = std::log(std::max(1e-12, 1.0 - w * w));
        if (denom < 0.0) {
          const int est = static_cast<int>(std::ceil(std::log(1.0 - 0.999) / denom));
          needed = std::clamp(est, 1, max_iters);
        }
      }
    }
  }
  if (best_inliers.empty()) throw Error("fit_line_lo_ransac: no model found");

  // Canonicalize and attach support statistics.
  Line3D out;
  out.direction = geo::canonical_sign_first(best.direction.normalized());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const int i : best_inliers) {
    const double s = (pts[i] - best.point).dot(out.direction);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // Origin at the midpoint of the inlier extent; stable under sign flips.
  out.origin = best.point + 0.5 * (lo + hi) * out.direction;
  out.support = static_cast<int>(best_inliers.size());
  out.inlier_rate = static_cast<double>(best_inliers.size()) / static_cast<double>(n);
  out.projected_length = hi - lo;
  return out;
}

/// Greedy agglomerative clustering of line directions on the unit sphere
/// with the sign-invariant metric min(angle(u,v), angle(u,-v)). The cluster
/// representative is the support-weighted mean direction (members aligned
/// to the representative's hemisphere), renormalized.
inline std::vector<std::vector<int>> cluster_directions(std::span<const Line3D> lines,
                                                        double angle_tol_deg) {
  if (lines.empty()) throw Error("cluster_directions: empty input");
  const double tol = num::deg2rad(angle_tol_deg);
  std::vector<std::vector<int>> clusters;
  std::vector<Vec3> reps;
  std::vector<double> weights;
  for (size_t i = 0; i < lines.size(); ++i) {
    int best_c = -1;
    double best_angle = tol;
    for (size_t c = 0; c < reps.size(); ++c) {
      const double a = geo::axis_angle(lines[i].direction, reps[c]);
      if (a <= best_angle) {
        best_angle = a;
        best_c = static_cast<int>(c);
      }
    }
    const double w = std::max(1, lines[i].support);
    if (best_c < 0) {
      clusters.push_back({static_cast<int>(i)});
      reps.push_back(lines[i].direction);
      weights.push_back(w);
    } else {
      clusters[best_c].push_back(static_cast<int>(i));
      Vec3 d = lines[i].direction;
      if (d.dot(reps[best_c]) < 0.0) d = -d;
      reps[best_c] = (weights[best_c] * reps[best_c] + w * d).normalized();
      weights[best_c] += w;
    }
  }
  return clusters;
}

/// Per-cluster consolidation: within a direction cluster, member lines are
/// grouped by collinearity (mutual origin-to-line distance within tol) and
/// each group is refit with LO-RANSAC on its pooled track points. Spatially
/// distinct parallel lines therefore survive as separate candidates.
inline std::vector<Line3D> consolidate_candidates(std::span<const Line3D> fitted,
                                                  std::span<const PointTrack> tracks,
                                                  const std::vector<std::vector<int>>& clusters,
                                                  const Config& cfg, std::uint64_t seed) {
  if (fitted.size() != tracks.size()) throw Error("consolidate_candidates: line/track count mismatch");
  std::vector<Line3D> out;
  for (const auto& cluster : clusters) {
    std::vector<std::vector<int>> groups;
    for (const int li : cluster) {
      bool placed = false;
      for (auto& g : groups) {
        const Line3D& ref = fitted[g.front()];
        const double d1 = geo::point_line_distance(fitted[li].origin, ref.origin, ref.direction);
        const double d2 = geo::point_line_distance(ref.origin, fitted[li].origin, fitted[li].direction);
        if (std::max(d1, d2) <= 2.0 * cfg.line_fit_tol) {
          g.push_back(li);
          placed = true;
          break;
        }
      }
      if (!placed) groups.push_back({li});
    }
    for (const auto& g : groups) {
      PointTrack pooled;
      for (const int li : g) {
        pooled.points.insert(pooled.points.end(), tracks[li].points.begin(), tracks[li].points.end());
        pooled.views.insert(pooled.views.end(), tracks[li].views.begin(), tracks[li].views.end());
      }
      if (pooled.points.size() < 2) continue;
      try {
        out.push_back(fit_line_lo_ransac(pooled, cfg.line_fit_tol, cfg.ransac_max_iters,
                                         derive_seed(seed, "consolidate" + std::to_string(out.size()))));
      } catch (const Error&) {
        // Degenerate pooled group: skip.
      }
    }
  }
  return out;
}

}  // namespace artikit::lines
