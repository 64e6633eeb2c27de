#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "artikit/numeric.hpp"

namespace artikit::geo {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

/// Canonical sign for undirected lines: first component with |c| > eps is
/// made positive. Stable under small perturbations away from the boundary.
inline Vec3 canonical_sign_first(const Vec3& v, double eps = 1e-12) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > eps) return v[i] < 0.0 ? Vec3(-v) : v;
  }
  return v;
}

/// Canonical sign for axial data: dominant component made positive.
/// Unlike first-nonzero, this never splits a tight bundle of directions
/// whose small leading component straddles zero.
inline Vec3 canonical_sign_dominant(const Vec3& v) {
  int k = 0;
  double best = std::abs(v[0]);
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      k = i;
    }
  }
  return v[k] < 0.0 ? Vec3(-v) : v;
}

/// Sign-invariant angle between two axes, radians, in [0, pi/2].
inline double axis_angle(const Vec3& a, const Vec3& b) {
  const double c = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return std::acos(c);
}

inline double axis_angle_deg(const Vec3& a, const Vec3& b) {
  return num::rad2deg(axis_angle(a, b));
}

/// Orthogonal distance from p to the line (q, u), u unit.
inline double point_line_distance(const Vec3& p, const Vec3& q, const Vec3& u) {
  return (p - q).cross(u).norm();
}

/// Orthogonal projection of p onto the line (q, u), u unit.
inline Vec3 project_to_line(const Vec3& p, const Vec3& q, const Vec3& u) {
  return q + (p - q).dot(u) * u;
}

/// Nearest rotation matrix (Frobenius) with det +1.
inline Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

inline Mat3 rotation_about(const Vec3& axis, double rad) {
  return Eigen::AngleAxisd(rad, axis.normalized()).toRotationMatrix();
}

/// Max deviation of R from orthonormality, ||R^T R - I||_inf.
inline double orthonormality_drift(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

/// Any unit vector orthogonal to u (u unit).
inline Vec3 any_orthogonal(const Vec3& u) {
  const Vec3 probe = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return u.cross(probe).normalized();
}

}  // namespace artikit::geo
