#pragma once

#include <array>
#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "meshmap/error.hpp"

namespace meshmap {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Rot6d = std::array<double, 6>;

inline constexpr Rot6d kIdentity6d = {1, 0, 0, 0, 1, 0};
inline constexpr double kRotationEps = 1e-8;

/// Continuous 6D rotation parameterization: the two 3-vectors are the first
/// two columns before orthonormalization. Column 1 is normalized, column 2
/// is made orthogonal to it (Gram-Schmidt) and the third column is their
/// cross product, so the result is always a proper rotation.
inline Mat3 rot6d_to_matrix(std::span<const double, 6> r) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  if (!(n1 > kRotationEps) || !(a2.norm() > kRotationEps))
    fail(ErrorCode::DegenerateRotation, "6D rotation has a near-zero column");
  const Vec3 b1 = a1 / n1;
  const Vec3 u = a2 - b1.dot(a2) * b1;
  const double nu = u.norm();
  if (!(nu > kRotationEps * a2.norm()))
    fail(ErrorCode::DegenerateRotation, "6D rotation columns are parallel");
  const Vec3 b2 = u / nu;
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b1.cross(b2);
  return R;
}

inline Mat3 rot6d_to_matrix(const Rot6d& r) {
  return rot6d_to_matrix(std::span<const double, 6>(r));
}

/// Pulls a gradient dL/dR (3x3) back to dL/dr for the 6 raw values.
inline Rot6d rot6d_backward(std::span<const double, 6> r, const Mat3& grad_R) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  const Vec3 b1 = a1 / n1;
  const double proj = b1.dot(a2);
  const Vec3 u = a2 - proj * b1;
  const double nu = u.norm();
  const Vec3 b2 = u / nu;

  Vec3 g1 = grad_R.col(0);
  Vec3 g2 = grad_R.col(1);
  const Vec3 g3 = grad_R.col(2);
  // b3 = b1 x b2
  g1 += b2.cross(g3);
  g2 += g3.cross(b1);
  // b2 = u / |u|
  const Vec3 gu = (g2 - b2 * b2.dot(g2)) / nu;
  // u = a2 - (b1.a2) b1
  const Vec3 ga2 = gu - b1 * b1.dot(gu);
  g1 -= proj * gu + a2 * b1.dot(gu);
  // b1 = a1 / |a1|
  const Vec3 ga1 = (g1 - b1 * b1.dot(g1)) / n1;
  return {ga1.x(), ga1.y(), ga1.z(), ga2.x(), ga2.y(), ga2.z()};
}

inline Rot6d matrix_to_rot6d(const Mat3& R) {
  return {R(0, 0), R(1, 0), R(2, 0), R(0, 1), R(1, 1), R(2, 1)};
}

inline Mat3 axis_angle_to_matrix(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-15) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

/// ||R^T R - I||_inf <= tol and det(R) > 0.
inline bool is_rotation(const Mat3& R, double tol = 1e-6) {
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

/// Geodesic distance (radians) between two rotations. Uses atan2 of the
/// skew and symmetric parts so small angles stay accurate.
inline double geodesic_angle(const Mat3& A, const Mat3& B) {
  const Mat3 D = A.transpose() * B;
  const double c = 0.5 * (D.trace() - 1.0);
  const Vec3 w(D(2, 1) - D(1, 2), D(0, 2) - D(2, 0), D(1, 0) - D(0, 1));
  return std::atan2(0.5 * w.norm(), c);
}

}  // namespace meshmap
