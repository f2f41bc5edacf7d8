#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "meshmap/body_model.hpp"
#include "meshmap/error.hpp"
#include "meshmap/maps.hpp"

namespace meshmap {

using Vec2 = Eigen::Vector2d;

/// 2D joints in heatmap-pixel coordinates (x = column, y = row).
struct Joints2D {
  Points2 positions;
  std::vector<bool> visible;

  int size() const { return static_cast<int>(positions.rows()); }
};

/// Mean of the visible torso joints; falls back to the mean of all visible
/// joints when no torso joint is visible. Torso indices beyond the joint
/// count are ignored.
inline Vec2 compute_body_center(const Joints2D& joints,
                                std::span<const int> torso = kTorsoJoints) {
  if (joints.visible.size() != static_cast<std::size_t>(joints.size()))
    fail(ErrorCode::Shape, "visibility length does not match joint count");
  Vec2 sum = Vec2::Zero();
  int n = 0;
  for (int j : torso) {
    if (j < 0 || j >= joints.size() || !joints.visible[static_cast<std::size_t>(j)]) continue;
    sum += joints.positions.row(j).transpose();
    ++n;
  }
  if (n > 0) return sum / n;
  for (int j = 0; j < joints.size(); ++j) {
    if (!joints.visible[static_cast<std::size_t>(j)]) continue;
    sum += joints.positions.row(j).transpose();
    ++n;
  }
  if (n == 0) fail(ErrorCode::NoCenter, "person has no visible joints");
  return sum / n;
}

struct KernelParams {
  double k_l = 2.0;  // minimum kernel size
  double k_r = 5.0;  // variation range
};

/// Scale-adaptive kernel size: k = k_l + (d_bb / (sqrt(2) W))^2 * k_r with
/// the ratio clamped to [0, 1].
inline double kernel_size(double bbox_diag, double map_width, KernelParams p = {}) {
  const double ratio = std::clamp(bbox_diag / (std::sqrt(2.0) * map_width), 0.0, 1.0);
  return p.k_l + ratio * ratio * p.k_r;
}

/// Diagonal of the bounding box around the visible joints, in heatmap px.
inline double bbox_diagonal(const Joints2D& joints) {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  bool any = false;
  for (int j = 0; j < joints.size(); ++j) {
    if (!joints.visible[static_cast<std::size_t>(j)]) continue;
    lo = lo.cwiseMin(joints.positions.row(j).transpose());
    hi = hi.cwiseMax(joints.positions.row(j).transpose());
    any = true;
  }
  return any ? (hi - lo).norm() : 0.0;
}

struct CenterSpec {
  Vec2 center;  // (x, y) heatmap px
  double kernel = 2.0;
};

/// Kernel radius is about 3 sigma.
inline double gaussian_sigma(double kernel) { return (2.0 * kernel + 1.0) / 6.0; }

inline Cell nearest_cell(const Vec2& p) {
  return {static_cast<int>(std::floor(p.y() + 0.5)), static_cast<int>(std::floor(p.x() + 0.5))};
}

inline bool in_bounds(const Vec2& p, int height, int width) {
  return p.x() >= 0.0 && p.x() <= width - 1 && p.y() >= 0.0 && p.y() <= height - 1;
}

/// Unnormalized Gaussians centered on each rounded center, truncated to a
/// (2*ceil(k)+1)^2 window, merged by per-cell max.
inline CenterHeatmap render_heatmap(std::span<const CenterSpec> specs, int height, int width) {
  CenterHeatmap map(height, width);
  for (const auto& spec : specs) {
    if (!in_bounds(spec.center, height, width))
      fail(ErrorCode::Bounds, "center lies outside the heatmap");
    const Cell c = nearest_cell(spec.center);
    const double sigma = gaussian_sigma(spec.kernel);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    const int radius = static_cast<int>(std::ceil(spec.kernel));
    for (int dy = -radius; dy <= radius; ++dy) {
      const int r = c.row + dy;
      if (r < 0 || r >= height) continue;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int col = c.col + dx;
        if (col < 0 || col >= width) continue;
        const double v = std::exp(-(dx * dx + dy * dy) * inv);
        map.at(r, col) = std::max(map.at(r, col), v);
      }
    }
  }
  return map;
}

/// One application of the pairwise repulsion: both centers move by
/// gamma * d_p along the line joining them, where
/// d_p = ((k1 + k2 + 1 - d) / d) (c1 - c2).
inline std::pair<Vec2, Vec2> car_repel_pair(const Vec2& c1, const Vec2& c2, double k1, double k2,
                                            double gamma) {
  const Vec2 diff = c1 - c2;
  const double d = diff.norm();
  const Vec2 dp = ((k1 + k2 + 1.0 - d) / d) * diff;
  return {c1 + gamma * dp, c2 - gamma * dp};
}

inline bool car_triggered(const Vec2& c1, const Vec2& c2, double k1, double k2,
                          double tolerance = 0.0) {
  return (c1 - c2).norm() < k1 + k2 + 1.0 - tolerance;
}

struct CarOptions {
  int max_sweeps = 100;
  /// A pair counts as triggered only while it is more than this far (px)
  /// inside the trigger distance; the repulsion approaches the boundary
  /// geometrically and would otherwise never stop.
  double tolerance = 1e-6;
};

struct CarResult {
  std::vector<Vec2> centers;
  int sweeps = 0;
  bool converged = true;
};

/// Collision-aware repulsion over a whole crowd. Pairs (i < j) are visited in
/// ascending order and updated in place, each update clamped to the map.
/// Kernel sizes are not recomputed after displacement.
inline CarResult apply_car(std::span<const CenterSpec> specs, double gamma, int height, int width,
                           CarOptions opts = {}) {
  if (gamma < 0.0) fail(ErrorCode::InvalidArgument, "CAR intensity must be non-negative");
  CarResult res;
  res.centers.reserve(specs.size());
  for (const auto& s : specs) {
    if (!in_bounds(s.center, height, width)) fail(ErrorCode::Bounds, "center lies outside the map");
    res.centers.push_back(s.center);
  }
  if (gamma == 0.0 || specs.size() < 2) return res;

  auto clamp = [&](Vec2& p) {
    p.x() = std::clamp(p.x(), 0.0, static_cast<double>(width - 1));
    p.y() = std::clamp(p.y(), 0.0, static_cast<double>(height - 1));
  };

  res.converged = false;
  auto& c = res.centers;
  while (res.sweeps < opts.max_sweeps) {
    ++res.sweeps;
    bool any = false;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        const double ki = specs[i].kernel, kj = specs[j].kernel;
        if (!car_triggered(c[i], c[j], ki, kj, opts.tolerance)) continue;
        any = true;
        if ((c[i] - c[j]).norm() < 1e-6) {
          c[j].x() += c[j].x() + 1.0 <= width - 1 ? 1.0 : -1.0;
        }
        auto [a, b] = car_repel_pair(c[i], c[j], ki, kj, gamma);
        clamp(a);
        clamp(b);
        c[i] = a;
        c[j] = b;
      }
    }
    if (!any) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace meshmap
