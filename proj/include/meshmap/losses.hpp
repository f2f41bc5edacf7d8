#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "meshmap/body_model.hpp"
#include "meshmap/camera.hpp"
#include "meshmap/error.hpp"
#include "meshmap/gmm_prior.hpp"
#include "meshmap/maps.hpp"
#include "meshmap/procrustes.hpp"

namespace meshmap {

struct LossWeights {
  double center = 200.0;
  double pose = 60.0;
  double shape = 1.0;
  double j3d = 360.0;
  double paj3d = 400.0;
  double pj2d = 420.0;
  double prior = 1.6;

  void validate() const {
    for (double w : {center, pose, shape, j3d, paj3d, pj2d, prior})
      if (!(w >= 0.0) || !std::isfinite(w))
        fail(ErrorCode::InvalidArgument, "loss weights must be finite and non-negative");
  }
};

// ---------------------------------------------------------------------------
// Body center focal loss
// ---------------------------------------------------------------------------

inline constexpr double kFocalEps = 1e-4;

namespace detail {
inline void check_same_size(const CenterHeatmap& a, const CenterHeatmap& b) {
  if (a.height() != b.height() || a.width() != b.width())
    fail(ErrorCode::Shape, "heatmaps differ in size");
}
}  // namespace detail

/// Focal loss on the center heatmap. Only cells with gt >= 1 are positives;
/// the Gaussian skirt is a down-weighted negative through (1 - gt)^4.
/// Predictions are clamped to [eps, 1 - eps] before the logs.
inline double focal_center_loss(const CenterHeatmap& pred, const CenterHeatmap& gt,
                                double weight = 200.0) {
  detail::check_same_size(pred, gt);
  const auto p = pred.values();
  const auto g = gt.values();
  double pos = 0.0, neg = 0.0, n_pos = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kFocalEps, 1.0 - kFocalEps);
    if (g[i] >= 1.0) {
      pos += std::log(q) * (1.0 - q) * (1.0 - q);
      n_pos += 1.0;
    } else {
      const double skirt = (1.0 - g[i]) * (1.0 - g[i]);
      neg += std::log(1.0 - q) * q * q * skirt * skirt;
    }
  }
  if (n_pos == 0.0) fail(ErrorCode::NoPositive, "ground-truth heatmap has no positive cell");
  return -(pos + neg) / n_pos * weight;
}

/// dL/dpred per cell; zero where the prediction is clamped.
inline std::vector<double> focal_center_loss_grad(const CenterHeatmap& pred,
                                                  const CenterHeatmap& gt, double weight = 200.0) {
  detail::check_same_size(pred, gt);
  const auto p = pred.values();
  const auto g = gt.values();
  const double n_pos = static_cast<double>(std::count_if(g.begin(), g.end(), [](double v) { return v >= 1.0; }));
  if (n_pos == 0.0) fail(ErrorCode::NoPositive, "ground-truth heatmap has no positive cell");
  std::vector<double> grad(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = p[i];
    if (q < kFocalEps || q > 1.0 - kFocalEps) continue;
    double d;
    if (g[i] >= 1.0) {
      d = (1.0 - q) * (1.0 - q) / q - 2.0 * std::log(q) * (1.0 - q);
    } else {
      const double skirt = (1.0 - g[i]) * (1.0 - g[i]);
      d = (-q * q / (1.0 - q) + 2.0 * q * std::log(1.0 - q)) * skirt * skirt;
    }
    grad[i] = -d / n_pos * weight;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Mesh parameter loss terms. Each "L2 loss" is a mean of squared errors:
// per joint for rotations and joints, per coefficient for shape.
// ---------------------------------------------------------------------------

/// Mean squared Frobenius distance between per-joint rotation matrices.
inline double pose_loss(const PoseParams& pred, const PoseParams& gt) {
  if (pred.joint_count() != gt.joint_count() || pred.joint_count() == 0)
    fail(ErrorCode::Shape, "pose joint counts differ");
  double sum = 0.0;
  for (int j = 0; j < pred.joint_count(); ++j)
    sum += (rot6d_to_matrix(pred.rot6d[j]) - rot6d_to_matrix(gt.rot6d[j])).squaredNorm();
  return sum / pred.joint_count();
}

inline std::vector<Rot6d> pose_loss_grad(const PoseParams& pred, const PoseParams& gt) {
  if (pred.joint_count() != gt.joint_count() || pred.joint_count() == 0)
    fail(ErrorCode::Shape, "pose joint counts differ");
  std::vector<Rot6d> grad(pred.rot6d.size());
  for (int j = 0; j < pred.joint_count(); ++j) {
    const Mat3 dR = 2.0 / pred.joint_count() *
                    (rot6d_to_matrix(pred.rot6d[j]) - rot6d_to_matrix(gt.rot6d[j]));
    grad[j] = rot6d_backward(pred.rot6d[j], dR);
  }
  return grad;
}

inline double shape_loss(const ShapeParams& pred, const ShapeParams& gt) {
  double sum = 0.0;
  for (int b = 0; b < kShapeDims; ++b) {
    const double d = pred.beta[b] - gt.beta[b];
    sum += d * d;
  }
  return sum / kShapeDims;
}

inline ShapeParams shape_loss_grad(const ShapeParams& pred, const ShapeParams& gt) {
  ShapeParams g;
  for (int b = 0; b < kShapeDims; ++b) g.beta[b] = 2.0 * (pred.beta[b] - gt.beta[b]) / kShapeDims;
  return g;
}

inline Points3 root_centered(const Points3& joints, int root = joint::kPelvis) {
  if (root < 0 || root >= joints.rows()) fail(ErrorCode::Shape, "root joint out of range");
  return joints.rowwise() - joints.row(root);
}

namespace detail {
inline void check_joints(const Points3& a, const Points3& b) {
  if (a.rows() != b.rows() || a.rows() == 0) fail(ErrorCode::Shape, "joint counts differ");
}
}  // namespace detail

/// Mean squared joint distance after centering both sets at the pelvis.
inline double j3d_loss(const Points3& pred, const Points3& gt) {
  detail::check_joints(pred, gt);
  return (root_centered(pred) - root_centered(gt)).rowwise().squaredNorm().mean();
}

inline Points3 j3d_loss_grad(const Points3& pred, const Points3& gt) {
  detail::check_joints(pred, gt);
  const Points3 e = root_centered(pred) - root_centered(gt);
  Points3 g = 2.0 / static_cast<double>(pred.rows()) * e;
  g.row(joint::kPelvis) -= g.colwise().sum();
  return g;
}

/// Mean squared joint distance after similarity (Procrustes) alignment of
/// the prediction onto the ground truth.
inline double paj3d_loss(const Points3& pred, const Points3& gt) {
  detail::check_joints(pred, gt);
  return procrustes_align(pred, gt).residual / static_cast<double>(pred.rows());
}

/// At the optimum the alignment parameters are stationary, so the gradient
/// is that of ||s R x + t - y||^2 with (s, R, t) held fixed.
inline Points3 paj3d_loss_grad(const Points3& pred, const Points3& gt) {
  detail::check_joints(pred, gt);
  const Similarity sim = procrustes_align(pred, gt);
  const Points3 e = sim.aligned - gt;
  return (2.0 * sim.scale / static_cast<double>(pred.rows())) * (e * sim.rotation);
}

/// 2D keypoints in normalized image coordinates.
struct Keypoints2D {
  Points2 positions;
  std::vector<bool> visible;
};

namespace detail {
inline int visible_count(const Keypoints2D& kp) {
  return static_cast<int>(std::count(kp.visible.begin(), kp.visible.end(), true));
}
}  // namespace detail

/// Mean squared distance between projected and annotated 2D joints over the
/// visible joints.
inline double pj2d_loss(const Points3& pred_joints, const CameraParams& cam, const Keypoints2D& gt) {
  if (gt.positions.rows() != pred_joints.rows() ||
      gt.visible.size() != static_cast<std::size_t>(pred_joints.rows()))
    fail(ErrorCode::Shape, "2D keypoints do not match joint count");
  const int n = detail::visible_count(gt);
  if (n == 0) return 0.0;
  const Points2 proj = project(pred_joints, cam);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < proj.rows(); ++j)
    if (gt.visible[static_cast<std::size_t>(j)]) sum += (proj.row(j) - gt.positions.row(j)).squaredNorm();
  return sum / n;
}

struct Pj2dGradient {
  Points3 joints;
  CameraParams cam{0.0, 0.0, 0.0};
};

inline Pj2dGradient pj2d_loss_grad(const Points3& pred_joints, const CameraParams& cam,
                                   const Keypoints2D& gt) {
  Pj2dGradient g;
  g.joints = Points3::Zero(pred_joints.rows(), 3);
  const int n = detail::visible_count(gt);
  if (n == 0) return g;
  const Points2 proj = project(pred_joints, cam);
  for (Eigen::Index j = 0; j < proj.rows(); ++j) {
    if (!gt.visible[static_cast<std::size_t>(j)]) continue;
    const double ex = 2.0 * (proj(j, 0) - gt.positions(j, 0)) / n;
    const double ey = 2.0 * (proj(j, 1) - gt.positions(j, 1)) / n;
    g.joints(j, 0) = cam.s * ex;
    g.joints(j, 1) = cam.s * ey;
    g.cam.s += ex * pred_joints(j, 0) + ey * pred_joints(j, 1);
    g.cam.tx += ex;
    g.cam.ty += ey;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Combined mesh parameter loss
// ---------------------------------------------------------------------------

struct MeshPrediction {
  MeshParams params;
  Points3 joints;  // regressed from the predicted mesh
};

/// Ground truth for one person; any field may be missing (e.g. images with
/// only 2D annotations).
struct MeshTarget {
  std::optional<PoseParams> pose;
  std::optional<ShapeParams> shape;
  std::optional<Points3> joints;
  std::optional<Keypoints2D> joints2d;
};

struct LossBreakdown {
  // Unweighted term values; 0 when unavailable.
  double pose = 0.0;
  double shape = 0.0;
  double j3d = 0.0;
  double paj3d = 0.0;
  double pj2d = 0.0;
  double prior = 0.0;
  double total = 0.0;
  bool has_pose = false;
  bool has_shape = false;
  bool has_j3d = false;
  bool has_pj2d = false;
  bool has_prior = false;
};

inline LossBreakdown mesh_param_loss(const MeshPrediction& pred, const MeshTarget& gt,
                                     const LossWeights& w, const GmmPrior* prior = nullptr) {
  w.validate();
  LossBreakdown out;
  out.has_pose = gt.pose.has_value();
  out.has_shape = gt.shape.has_value();
  out.has_j3d = gt.joints.has_value();
  out.has_pj2d = gt.joints2d.has_value() && detail::visible_count(*gt.joints2d) > 0;
  out.has_prior = prior != nullptr;
  if (!out.has_pose && !out.has_shape && !out.has_j3d && !out.has_pj2d)
    fail(ErrorCode::EmptySupervision, "person has no available supervision");

  if (out.has_pose) out.pose = pose_loss(pred.params.pose, *gt.pose);
  if (out.has_shape) out.shape = shape_loss(pred.params.shape, *gt.shape);
  if (out.has_j3d) {
    out.j3d = j3d_loss(pred.joints, *gt.joints);
    out.paj3d = paj3d_loss(pred.joints, *gt.joints);
  }
  if (out.has_pj2d) out.pj2d = pj2d_loss(pred.joints, pred.params.cam, *gt.joints2d);
  if (out.has_prior) out.prior = gmm_prior_loss(pred.params.pose, pred.params.shape, *prior);

  out.total = w.pose * out.pose + w.shape * out.shape + w.j3d * out.j3d + w.paj3d * out.paj3d +
              w.pj2d * out.pj2d + w.prior * out.prior;
  return out;
}

}  // namespace meshmap
