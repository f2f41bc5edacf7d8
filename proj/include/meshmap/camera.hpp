#pragma once

#include <Eigen/Dense>

#include "meshmap/body_model.hpp"

namespace meshmap {

/// Weak-perspective camera: scale s and normalized translation (tx, ty).
struct CameraParams {
  double s = 1.0;
  double tx = 0.0;
  double ty = 0.0;
  friend bool operator==(const CameraParams&, const CameraParams&) = default;
};

/// x' = s*x + tx, y' = s*y + ty; depth is dropped.
inline Points2 project(const Points3& joints, const CameraParams& cam) {
  Points2 out(joints.rows(), 2);
  out.col(0) = cam.s * joints.col(0).array() + cam.tx;
  out.col(1) = cam.s * joints.col(1).array() + cam.ty;
  return out;
}

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
  bool out_of_frame = false;
};

// Normalized coordinates span (-1, 1) across the padded square image; pixel
// centers run from 0 to size-1 on the heatmap grid.
inline PixelPoint normalized_to_heatmap(double x, double y, int height, int width) {
  PixelPoint p;
  p.x = (x + 1.0) * 0.5 * (width - 1);
  p.y = (y + 1.0) * 0.5 * (height - 1);
  p.out_of_frame = !(x > -1.0 && x < 1.0 && y > -1.0 && y < 1.0);
  return p;
}

inline Eigen::Vector2d heatmap_to_normalized(double px, double py, int height, int width) {
  return {2.0 * px / (width - 1) - 1.0, 2.0 * py / (height - 1) - 1.0};
}

inline Points2 normalized_to_heatmap(const Points2& pts, int height, int width) {
  Points2 out(pts.rows(), 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const auto p = normalized_to_heatmap(pts(i, 0), pts(i, 1), height, width);
    out(i, 0) = p.x;
    out(i, 1) = p.y;
  }
  return out;
}

}  // namespace meshmap
