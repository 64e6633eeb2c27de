#pragma once

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artikit/bundle.hpp"
#include "artikit/config.hpp"
#include "artikit/trajectory.hpp"
#include "artikit/types.hpp"

namespace artikit::reason {

enum class VoteLabel { rotation, translation, unknown };

inline std::string to_string(VoteLabel v) {
  switch (v) {
    case VoteLabel::rotation: return "rotation";
    case VoteLabel::translation: return "translation";
    default: return "unknown";
  }
}

inline VoteLabel vote_label_from_string(const std::string& s) {
  if (s == "rotation") return VoteLabel::rotation;
  if (s == "translation") return VoteLabel::translation;
  if (s == "unknown") return VoteLabel::unknown;
  throw Error("schema mismatch: motion label '" + s + "'");
}

inline std::optional<MotionType> to_motion_type(VoteLabel v) {
  if (v == VoteLabel::rotation) return MotionType::revolute;
  if (v == VoteLabel::translation) return MotionType::prismatic;
  return std::nullopt;
}

struct FrameVote {
  int frame = 0;
  std::string furniture = "unknown";
  VoteLabel motion = VoteLabel::unknown;
};

/// Externally produced (VLM) answers for one clip, fed back through the
/// injection file.
struct InjectionRecord {
  std::string clip_id;
  std::vector<FrameVote> votes;
  // nullopt: defer to geometry (no filtering). Empty vector: the external
  // reasoner asserted that no presented line is a rotation axis.
  std::optional<std::vector<int>> axis_choice;
  std::vector<int> local_frames;  // optional override for local-frame selection
};

/// Majority vote after discarding unknowns; ties and all-unknown resolve to
/// unknown.
inline VoteLabel aggregate_votes(std::span<const FrameVote> votes) {
  if (votes.empty()) throw Error("aggregate_votes: empty vote list");
  int rot = 0, trans = 0;
  for (const auto& v : votes) {
    if (v.motion == VoteLabel::rotation) ++rot;
    if (v.motion == VoteLabel::translation) ++trans;
  }
  if (rot == trans) return VoteLabel::unknown;
  return rot > trans ? VoteLabel::rotation : VoteLabel::translation;
}

/// A line is retained iff at least one of its projected support samples
/// lands on a mask-positive pixel. Returns indices into `lines`.
inline std::vector<int> filter_candidates_by_mask(std::span<const Line3D> lines, const Mask& mask,
                                                  const Intrinsics& intr, const CameraPose& pose,
                                                  std::vector<std::string>* warnings = nullptr) {
  if (mask.width != intr.width || mask.height != intr.height)
    throw Error("filter_candidates_by_mask: mask dimensions mismatch intrinsics");
  if (mask.empty_mask()) {
    if (warnings) warnings->push_back("empty mask: all candidate lines rejected");
    return {};
  }
  std::vector<int> kept;
  constexpr int kSamples = 64;
  for (size_t li = 0; li < lines.size(); ++li) {
    const Line3D& l = lines[li];
    const double half = 0.5 * std::max(l.projected_length, 1e-6);
    bool hit = false;
    for (int s = 0; s <= kSamples && !hit; ++s) {
      const double t = -half + (2.0 * half * s) / kSamples;
      const Vec3 pw = l.origin + t * l.direction;
      const Vec3 pc = pose.to_camera(pw);
      if (pc.z() <= 0.0) continue;
      const Vec2 px = intr.project(pc);
      hit = mask.positive(static_cast<int>(std::lround(px.x())), static_cast<int>(std::lround(px.y())));
    }
    if (hit) kept.push_back(static_cast<int>(li));
  }
  return kept;
}

/// Top n candidates by projected length; ties break to the lower line id.
/// Returns indices into `lines` (fewer than n means all of them).
inline std::vector<int> select_top_candidates(std::span<const Line3D> lines, int n_cand) {
  std::vector<int> order(lines.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return lines[a].projected_length > lines[b].projected_length;
  });
  if (static_cast<int>(order.size()) > n_cand) order.resize(n_cand);
  return order;
}

/// Geometric fallback when no injected answers exist: compare a
/// total-least-squares line fit against a radius-capped least-squares
/// circle fit in the trajectory's best-fit plane. The radius cap
/// min(max_radius, 1.6 x extent) keeps a straight path from being explained
/// by an arbitrarily large circle; it covers true arcs of roughly 42
/// degrees and up.
inline VoteLabel heuristic_motion_type(const traj::SmoothedTrajectory& t, const Config& cfg) {
  const auto& pts = t.positions;
  if (pts.size() < 8) throw Error("heuristic_motion_type: at least 8 points required");

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 dir = es.eigenvectors().col(2);
  const Vec3 normal = es.eigenvectors().col(0);  // best-fit plane normal

  double line_ss = 0.0;
  double extent_lo = std::numeric_limits<double>::infinity();
  double extent_hi = -extent_lo;
  for (const auto& p : pts) {
    line_ss += (p - centroid).cross(dir).squaredNorm();
    const double s = (p - centroid).dot(dir);
    extent_lo = std::min(extent_lo, s);
    extent_hi = std::max(extent_hi, s);
  }
  const double line_rms = std::sqrt(line_ss / static_cast<double>(pts.size()));
  const double extent = extent_hi - extent_lo;

  // In-plane coordinates.
  const Vec3 e1 = dir;
  const Vec3 e2 = normal.cross(dir).normalized();
  std::vector<Vec2> q(pts.size());
  std::vector<double> h(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    const Vec3 d = pts[i] - centroid;
    q[i] = {d.dot(e1), d.dot(e2)};
    h[i] = d.dot(normal);
  }

  // Kasa algebraic circle fit: minimize ||p-c||^2 - r^2 residuals.
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& p : q) {
    const Eigen::Vector3d row(2.0 * p.x(), 2.0 * p.y(), 1.0);
    A += row * row.transpose();
    rhs += row * p.squaredNorm();
  }
  const Eigen::Vector3d sol = A.ldlt().solve(rhs);
  Vec2 center(sol[0], sol[1]);
  double radius = std::sqrt(std::max(0.0, sol[2] + center.squaredNorm()));

  const double cap = std::min(cfg.max_radius, 1.6 * std::max(extent, 1e-9));
  if (!(radius > 0.0) || !std::isfinite(radius) || radius > cap) {
    // Refit with the radius pinned at the cap: fixed-point iteration on the
    // stationarity condition c = mean(p + r * unit(c - p)).
    radius = cap;
    Vec2 dir2 = center.norm() > 1e-12 ? Vec2(center.normalized()) : Vec2(0.0, 1.0);
    Vec2 c = dir2 * radius;
    for (int iter = 0; iter < 100; ++iter) {
      Vec2 acc = Vec2::Zero();
      for (const auto& p : q) {
        Vec2 d = c - p;
        const double dn = d.norm();
        acc += p + (dn > 1e-12 ? (radius / dn) * d : Vec2(0.0, radius));
      }
      const Vec2 next = acc / static_cast<double>(q.size());
      if ((next - c).norm() < 1e-12) {
        c = next;
        break;
      }
      c = next;
    }
    center = c;
  }

  double circle_ss = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    const double rho = (q[i] - center).norm() - radius;
    circle_ss += rho * rho + h[i] * h[i];  // exact 3D distance to the circle
  }
  const double circle_rms = std::sqrt(circle_ss / static_cast<double>(q.size()));

  if (line_rms <= 0.5 * circle_rms) return VoteLabel::translation;
  if (circle_rms <= 0.5 * line_rms) return VoteLabel::rotation;
  return VoteLabel::unknown;
}

/// Loads the reasoner injection file: an array of records keyed by clip id.
inline std::map<std::string, InjectionRecord> load_injected_answers(const fs::path& path) {
  const nlohmann::json j = io::read_json_file(path);
  if (!j.is_array()) throw Error("schema mismatch: " + path.string() + ": expected an array of records");
  std::map<std::string, InjectionRecord> out;
  for (size_t i = 0; i < j.size(); ++i) {
    const auto& rec = j[i];
    InjectionRecord r;
    try {
      r.clip_id = rec.at("clip_id").get<std::string>();
      if (rec.contains("votes")) {
        for (const auto& vj : rec.at("votes")) {
          FrameVote v;
          v.frame = vj.at("frame").get<int>();
          v.furniture = vj.value("furniture", std::string("unknown"));
          v.motion = vote_label_from_string(vj.at("motion").get<std::string>());
          r.votes.push_back(v);
        }
      }
      if (rec.contains("axis_choice") && !rec.at("axis_choice").is_null()) {
        const auto& ac = rec.at("axis_choice");
        if (ac.is_string()) {
          if (ac.get<std::string>() != "none")
            throw Error("schema mismatch: axis_choice string must be \"none\"");
          r.axis_choice = std::vector<int>{};
        } else if (ac.is_array()) {
          std::vector<int> sel;
          for (const auto& v : ac) {
            const int k = v.get<int>();
            if (k < 0) throw Error("schema mismatch: axis_choice index out of range");
            sel.push_back(k);
          }
          r.axis_choice = std::move(sel);
        } else {
          throw Error("schema mismatch: axis_choice must be an int array or \"none\"");
        }
      }
      if (rec.contains("local_frames"))
        for (const auto& v : rec.at("local_frames")) r.local_frames.push_back(v.get<int>());
    } catch (const nlohmann::json::exception& e) {
      throw Error("schema mismatch: " + path.string() + " record " + std::to_string(i) + ": " + e.what());
    }
    out[r.clip_id] = std::move(r);
  }
  return out;
}

}  // namespace artikit::reason
