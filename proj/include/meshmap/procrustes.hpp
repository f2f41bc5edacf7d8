#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "meshmap/body_model.hpp"
#include "meshmap/error.hpp"

namespace meshmap {

struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Points3 aligned;        // scale * R * X + t
  double residual = 0.0;  // sum of squared distances to Y
};

/// Similarity transform (s, R, t) minimizing ||s R X + t - Y||^2 with a
/// proper rotation, via SVD of the centered cross-covariance.
inline Similarity procrustes_align(const Points3& X, const Points3& Y) {
  if (X.rows() != Y.rows()) fail(ErrorCode::Shape, "point sets differ in size");
  if (X.rows() < 3) fail(ErrorCode::Degenerate, "procrustes needs at least 3 points");

  const Eigen::RowVector3d mu_x = X.colwise().mean();
  const Eigen::RowVector3d mu_y = Y.colwise().mean();
  const Points3 X0 = X.rowwise() - mu_x;
  const Points3 Y0 = Y.rowwise() - mu_y;
  const double var_x = X0.squaredNorm();
  if (var_x < 1e-24 || Y0.squaredNorm() < 1e-24)
    fail(ErrorCode::Degenerate, "procrustes point set is degenerate");

  // H = sum x_i y_i^T; R maximizes tr(R H).
  const Mat3 H = X0.transpose() * Y0;
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  Vec3 sign(1.0, 1.0, (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0);

  Similarity out;
  out.rotation = V * sign.asDiagonal() * U.transpose();
  out.scale = svd.singularValues().dot(sign) / var_x;
  out.translation = mu_y.transpose() - out.scale * out.rotation * mu_x.transpose();
  out.aligned = ((out.scale * X * out.rotation.transpose()).rowwise() +
                 out.translation.transpose());
  out.residual = (out.aligned - Y).squaredNorm();
  return out;
}

}  // namespace meshmap
