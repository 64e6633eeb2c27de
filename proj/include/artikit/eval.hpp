#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "artikit/config.hpp"
#include "artikit/geometry.hpp"
#include "artikit/types.hpp"

namespace artikit::eval {

struct PairScore {
  bool m = false;
  bool ma = false;
  bool mao = false;
};

/// Nested M / MA / MAO check for one prediction. The axis test is
/// sign-invariant: 1 - |cos(angle)| <= 1 - cos(axis_angle_thresh). The
/// origin error is the minimal distance from the predicted origin to the
/// ground-truth axis line (origins are only defined up to sliding along the
/// axis) and is evaluated for revolute motion only.
inline PairScore score_pair(const Articulation& pred, const GroundTruthRecord& gt, const Config& cfg) {
  PairScore s;
  s.m = pred.motion_type == gt.motion_type;
  const double cos_dist = 1.0 - std::abs(pred.axis.normalized().dot(gt.axis.normalized()));
  const double thresh = 1.0 - std::cos(num::deg2rad(cfg.axis_angle_thresh));
  // The + 1e-12 guard makes the boundary an exact <=: an axis constructed
  // at precisely the threshold angle passes regardless of rounding.
  const bool axis_ok = cos_dist <= thresh + 1e-12;
  s.ma = s.m && axis_ok;
  if (gt.motion_type == MotionType::revolute) {
    const double origin_err = geo::point_line_distance(pred.origin, gt.origin, gt.axis.normalized());
    s.mao = s.ma && origin_err <= cfg.origin_dist_thresh + 1e-12;
  } else {
    s.mao = s.ma;  // origin is evaluated exclusively for revolute motion
  }
  return s;
}

struct PredictionRecord {
  std::string clip_id;
  std::optional<Articulation> articulation;  // nullopt: no estimate produced
};

struct SceneScores {
  std::string scene_id;
  int clips = 0;
  int detected = 0;
  double match_rate = 0.0;
  // Unconditional: misses count as all-false.
  double m = 0.0, ma = 0.0, mao = 0.0;
  // Conditional: averaged over produced estimates only.
  double m_cond = 0.0, ma_cond = 0.0, mao_cond = 0.0;
};

struct ScoreReport {
  std::vector<SceneScores> scenes;
  SceneScores overall;  // macro-average across scenes (or micro when requested)
  bool micro = false;
};

/// Scores a run against ground truth. Ground truth must cover every clip a
/// prediction refers to; clips without predictions count as misses in the
/// unconditional metrics. Per-scene means are macro-averaged (equal scene
/// weight) unless micro is requested.
inline ScoreReport score_run(std::span<const PredictionRecord> preds,
                             std::span<const GroundTruthRecord> gts, const Config& cfg,
                             bool micro = false) {
  std::map<std::string, const GroundTruthRecord*> gt_by_clip;
  for (const auto& g : gts) gt_by_clip[g.clip_id] = &g;
  std::map<std::string, const PredictionRecord*> pred_by_clip;
  for (const auto& p : preds) {
    if (!gt_by_clip.count(p.clip_id)) throw Error("score_run: prediction for unknown clip id " + p.clip_id);
    pred_by_clip[p.clip_id] = &p;
  }

  struct Acc {
    int clips = 0, detected = 0;
    int m = 0, ma = 0, mao = 0;
    int m_c = 0, ma_c = 0, mao_c = 0;
  };
  std::map<std::string, Acc> by_scene;
  for (const auto& g : gts) {
    Acc& a = by_scene[g.scene_id];
    ++a.clips;
    const auto it = pred_by_clip.find(g.clip_id);
    const bool has = it != pred_by_clip.end() && it->second->articulation.has_value();
    if (!has) continue;
    ++a.detected;
    const PairScore s = score_pair(*it->second->articulation, g, cfg);
    a.m += s.m;
    a.ma += s.ma;
    a.mao += s.mao;
    a.m_c += s.m;
    a.ma_c += s.ma;
    a.mao_c += s.mao;
  }

  ScoreReport rep;
  rep.micro = micro;
  Acc total;
  int scenes_with_detections = 0;
  SceneScores macro;
  for (const auto& [scene, a] : by_scene) {
    SceneScores s;
    s.scene_id = scene;
    s.clips = a.clips;
    s.detected = a.detected;
    s.match_rate = a.clips ? static_cast<double>(a.detected) / a.clips : 0.0;
    s.m = a.clips ? static_cast<double>(a.m) / a.clips : 0.0;
    s.ma = a.clips ? static_cast<double>(a.ma) / a.clips : 0.0;
    s.mao = a.clips ? static_cast<double>(a.mao) / a.clips : 0.0;
    s.m_cond = a.detected ? static_cast<double>(a.m_c) / a.detected : 0.0;
    s.ma_cond = a.detected ? static_cast<double>(a.ma_c) / a.detected : 0.0;
    s.mao_cond = a.detected ? static_cast<double>(a.mao_c) / a.detected : 0.0;
    rep.scenes.push_back(s);

    total.clips += a.clips;
    total.detected += a.detected;
    total.m += a.m;
    total.ma += a.ma;
    total.mao += a.mao;
    total.m_c += a.m_c;
    total.ma_c += a.ma_c;
    total.mao_c += a.mao_c;

    macro.match_rate += s.match_rate;
    macro.m += s.m;
    macro.ma += s.ma;
    macro.mao += s.mao;
    if (a.detected) {
      ++scenes_with_detections;
      macro.m_cond += s.m_cond;
      macro.ma_cond += s.ma_cond;
      macro.mao_cond += s.mao_cond;
    }
  }

  SceneScores& o = rep.overall;
  o.scene_id = "overall";
  o.clips = total.clips;
  o.detected = total.detected;
  if (micro) {
    o.match_rate = total.clips ? static_cast<double>(total.detected) / total.clips : 0.0;
    o.m = total.clips ? static_cast<double>(total.m) / total.clips : 0.0;
    o.ma = total.clips ? static_cast<double>(total.ma) / total.clips : 0.0;
    o.mao = total.clips ? static_cast<double>(total.mao) / total.clips : 0.0;
    o.m_cond = total.detected ? static_cast<double>(total.m_c) / total.detected : 0.0;
    o.ma_cond = total.detected ? static_cast<double>(total.ma_c) / total.detected : 0.0;
    o.mao_cond = total.detected ? static_cast<double>(total.mao_c) / total.detected : 0.0;
  } else {
    const double ns = static_cast<double>(rep.scenes.size());
    if (ns > 0) {
      o.match_rate = macro.match_rate / ns;
      o.m = macro.m / ns;
      o.ma = macro.ma / ns;
      o.mao = macro.mao / ns;
    }
    // Conditional metrics are undefined for scenes with no detections;
    // those scenes are excluded from the conditional macro-average.
    if (scenes_with_detections > 0) {
      o.m_cond = macro.m_cond / scenes_with_detections;
      o.ma_cond = macro.ma_cond / scenes_with_detections;
      o.mao_cond = macro.mao_cond / scenes_with_detections;
    }
  }
  return rep;
}

/// Aligned text table mirroring the benchmark columns:
/// Match %, M, MA, MAO, M+, MA+, MAO+ (the + columns are conditional).
inline std::string render_table(const ScoreReport& rep) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "Scene" << std::right << std::setw(9) << "Match %" << std::setw(7)
     << "M" << std::setw(7) << "MA" << std::setw(7) << "MAO" << std::setw(7) << "M+" << std::setw(8)
     << "MA+" << std::setw(8) << "MAO+" << "\n";
  auto row = [&](const SceneScores& s) {
    os << std::left << std::setw(16) << s.scene_id << std::right << std::fixed << std::setprecision(2)
       << std::setw(9) << 100.0 * s.match_rate << std::setw(7) << s.m << std::setw(7) << s.ma
       << std::setw(7) << s.mao << std::setw(7) << s.m_cond << std::setw(8) << s.ma_cond << std::setw(8)
       << s.mao_cond << "\n";
  };
  for (const auto& s : rep.scenes) row(s);
  row(rep.overall);
  return os.str();
}

}  // namespace artikit::eval
