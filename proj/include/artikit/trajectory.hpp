#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "artikit/config.hpp"
#include "artikit/numeric.hpp"
#include "artikit/types.hpp"

namespace artikit::traj {

/// Per-frame mean-fingertip observations with contact flags.
struct ObservedTrajectory {
  std::vector<double> timestamps;       // strictly increasing, seconds
  std::vector<Vec3> points;             // mean fingertip, world, meters
  std::vector<std::uint8_t> contact;    // carried through from observations

  size_t size() const { return points.size(); }
};

/// Exact discretization of the integrated Ornstein-Uhlenbeck prior for one
/// time interval. State ordering is [x, vx, y, vy, z, vz]; F and Q are
/// block-diagonal with three identical 2x2 per-axis blocks.
struct OUModel {
  double length_scale = 0.0;
  double process_noise = 0.0;
  double obs_noise = 0.0;
  Mat6 F = Mat6::Identity();
  Mat6 Q = Mat6::Zero();
  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  Mat3 R = Mat3::Zero();
};

namespace detail {

struct OUBlock {
  Eigen::Matrix2d f;
  Eigen::Matrix2d q;
};

/// Closed-form F(dt), Q(dt) for one axis. Velocity reverts at rate
/// lambda = 1/length_scale; position integrates it. expm1 keeps the small
/// lambda*dt regime accurate.
inline OUBlock ou_block(double dt, double length_scale, double process_noise) {
  const double lambda = 1.0 / length_scale;
  const double x = lambda * dt;
  const double em = -std::expm1(-x);        // 1 - e^{-lambda dt}
  const double em2 = -std::expm1(-2.0 * x); // 1 - e^{-2 lambda dt}
  OUBlock b;
  b.f << 1.0, em / lambda, 0.0, 1.0 - em;
  const double q2 = process_noise * process_noise;
  const double qvv = q2 * em2 / (2.0 * lambda);
  const double qpv = q2 / (lambda * lambda) * (em - 0.5 * em2);
  const double qpp = q2 / (lambda * lambda) * (dt - 2.0 * em / lambda + em2 / (2.0 * lambda));
  b.q << qpp, qpv, qpv, qvv;
  return b;
}

}  // namespace detail

/// z_t is the arithmetic mean of the thumb, index, and middle fingertips.
inline ObservedTrajectory aggregate_fingertips(std::span<const FingertipObservation> obs) {
  if (obs.empty()) throw Error("aggregate_fingertips: empty input");
  ObservedTrajectory t;
  t.timestamps.reserve(obs.size());
  t.points.reserve(obs.size());
  t.contact.reserve(obs.size());
  for (const auto& o : obs) {
    t.timestamps.push_back(o.timestamp);
    t.points.push_back((o.thumb + o.index + o.middle) / 3.0);
    t.contact.push_back(o.contact ? 1 : 0);
  }
  return t;
}

/// Keeps the longest contiguous run of contact == true (first run wins a
/// tie), removing pre- and post-interaction motion.
inline ObservedTrajectory trim_by_contact(const ObservedTrajectory& t) {
  if (t.contact.size() != t.size()) throw Error("trim_by_contact: contact flags required");
  size_t best_start = 0, best_len = 0;
  size_t i = 0;
  while (i < t.size()) {
    if (!t.contact[i]) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < t.size() && t.contact[j]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_start = i;
    }
    i = j;
  }
  if (best_len == 0) throw Rejection("no interaction detected");
  ObservedTrajectory out;
  out.timestamps.assign(t.timestamps.begin() + best_start, t.timestamps.begin() + best_start + best_len);
  out.points.assign(t.points.begin() + best_start, t.points.begin() + best_start + best_len);
  out.contact.assign(t.contact.begin() + best_start, t.contact.begin() + best_start + best_len);
  return out;
}

inline OUModel build_ou_model(double dt, const Config& cfg) {
  if (!(dt > 0.0)) throw Error("build_ou_model: dt > 0 required");
  OUModel m;
  m.length_scale = cfg.length_scale;
  m.process_noise = cfg.process_noise;
  m.obs_noise = cfg.obs_noise;
  const auto b = detail::ou_block(dt, cfg.length_scale, cfg.process_noise);
  for (int axis = 0; axis < 3; ++axis) {
    m.F.block<2, 2>(2 * axis, 2 * axis) = b.f;
    m.Q.block<2, 2>(2 * axis, 2 * axis) = b.q;
    m.H(axis, 2 * axis) = 1.0;
  }
  m.R = cfg.obs_noise * cfg.obs_noise * Mat3::Identity();
  return m;
}

struct FilterStep {
  double timestamp = 0.0;
  Vec6 x_pred = Vec6::Zero();
  Mat6 P_pred = Mat6::Zero();
  Vec6 x_filt = Vec6::Zero();
  Mat6 P_filt = Mat6::Zero();
  Mat6 F = Mat6::Identity();  // transition into this step
  bool gated = false;
};

struct FilterResult {
  std::vector<FilterStep> steps;
  std::vector<std::uint8_t> outlier_mask;  // over input observations
  double chi2_threshold = 0.0;
};

/// Forward Kalman pass with chi-square gating of the innovation. A gated
/// observation contributes nothing: the step keeps the prediction.
/// Initialization: position = first observation, velocity = 0, covariance
/// diag(obs_noise^2, 1) per axis; the first observation seeds the prior and
/// is not reused as a measurement.
inline FilterResult kalman_filter(const ObservedTrajectory& t, const Config& cfg) {
  if (t.size() < 2) throw Error("kalman_filter: at least 2 observations required");
  for (size_t i = 1; i < t.size(); ++i)
    if (!(t.timestamps[i] > t.timestamps[i - 1]))
      throw Error("kalman_filter: timestamps not strictly increasing");

  FilterResult r;
  r.chi2_threshold = num::chi2_quantile(1.0 - cfg.gate_p, 3);
  r.outlier_mask.assign(t.size(), 0);

  const Mat3 R = cfg.obs_noise * cfg.obs_noise * Mat3::Identity();
  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  H(0, 0) = H(1, 2) = H(2, 4) = 1.0;

  FilterStep s0;
  s0.timestamp = t.timestamps[0];
  for (int a = 0; a < 3; ++a) {
    s0.x_filt[2 * a] = t.points[0][a];
    s0.P_filt(2 * a, 2 * a) = cfg.obs_noise * cfg.obs_noise;
    s0.P_filt(2 * a + 1, 2 * a + 1) = 1.0;  // (1 m/s)^2 velocity prior
  }
  s0.x_pred = s0.x_filt;
  s0.P_pred = s0.P_filt;
  r.steps.push_back(s0);

  for (size_t k = 1; k < t.size(); ++k) {
    const double dt = t.timestamps[k] - t.timestamps[k - 1];
    const OUModel m = build_ou_model(dt, cfg);
    const FilterStep& prev = r.steps.back();

    FilterStep s;
    s.timestamp = t.timestamps[k];
    s.F = m.F;
    s.x_pred = m.F * prev.x_filt;
    s.P_pred = m.F * prev.P_filt * m.F.transpose() + m.Q;
    s.P_pred = 0.5 * (s.P_pred + s.P_pred.transpose()).eval();

    const Vec3 innovation = t.points[k] - H * s.x_pred;
    const Mat3 S = H * s.P_pred * H.transpose() + R;
    const double md2 = innovation.dot(S.ldlt().solve(innovation));
    if (md2 > r.chi2_threshold) {
      s.gated = true;
      s.x_filt = s.x_pred;
      s.P_filt = s.P_pred;
      r.outlier_mask[k] = 1;
    } else {
      const Eigen::Matrix<double, 6, 3> K = s.P_pred * H.transpose() * S.ldlt().solve(Mat3::Identity());
      s.x_filt = s.x_pred + K * innovation;
      // Joseph form keeps the covariance symmetric PSD.
      const Mat6 A = Mat6::Identity() - K * H;
      s.P_filt = A * s.P_pred * A.transpose() + K * R * K.transpose();
      s.P_filt = 0.5 * (s.P_filt + s.P_filt.transpose()).eval();
    }
    r.steps.push_back(s);
  }
  return r;
}

/// RTS-smoothed trajectory restricted to retained (non-gated) observations.
struct SmoothedTrajectory {
  std::vector<double> timestamps;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<Mat6> covariances;
  std::vector<std::uint8_t> outlier_mask;  // over the original observations

  size_t size() const { return positions.size(); }
};

/// Backward Rauch-Tung-Striebel recursion over all filter steps (gated
/// steps advance time as prediction-only states); output keeps only the
/// non-gated ones.
inline SmoothedTrajectory rts_smooth(const FilterResult& fr) {
  const auto& steps = fr.steps;
  if (steps.empty()) throw Error("rts_smooth: empty filter result");
  const size_t n = steps.size();
  std::vector<Vec6> xs(n);
  std::vector<Mat6> Ps(n);
  xs[n - 1] = steps[n - 1].x_filt;
  Ps[n - 1] = steps[n - 1].P_filt;
  for (size_t k = n - 1; k-- > 0;) {
    const Mat6 G = steps[k].P_filt * steps[k + 1].F.transpose() * steps[k + 1].P_pred.ldlt().solve(Mat6::Identity());
    xs[k] = steps[k].x_filt + G * (xs[k + 1] - steps[k + 1].x_pred);
    Ps[k] = steps[k].P_filt + G * (Ps[k + 1] - steps[k + 1].P_pred) * G.transpose();
    Ps[k] = 0.5 * (Ps[k] + Ps[k].transpose()).eval();
  }

  SmoothedTrajectory out;
  out.outlier_mask = fr.outlier_mask;
  for (size_t k = 0; k < n; ++k) {
    if (steps[k].gated) continue;
    out.timestamps.push_back(steps[k].timestamp);
    out.positions.emplace_back(xs[k][0], xs[k][2], xs[k][4]);
    out.velocities.emplace_back(xs[k][1], xs[k][3], xs[k][5]);
    out.covariances.push_back(Ps[k]);
  }
  return out;
}

/// Convenience composition used by the pipeline: aggregate, trim, filter,
/// smooth.
inline SmoothedTrajectory smooth_clip(std::span<const FingertipObservation> obs, const Config& cfg) {
  const ObservedTrajectory trimmed = trim_by_contact(aggregate_fingertips(obs));
  if (trimmed.size() < 2) throw Rejection("insufficient contact observations");
  return rts_smooth(kalman_filter(trimmed, cfg));
}

}  // namespace artikit::traj
