#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "meshmap/body_model.hpp"
#include "meshmap/error.hpp"
#include "meshmap/procrustes.hpp"
#include "meshmap/rotation.hpp"

namespace meshmap {

struct EvalResult {
  double mpjpe = 0.0;     // mm
  double pmpjpe = 0.0;    // mm
  double pve = 0.0;       // mm
  double pck = 0.0;       // fraction
  double auc = 0.0;       // fraction
  double mpjae = 0.0;     // degrees
  double pa_mpjae = 0.0;  // degrees
  double ap50 = 0.0;      // fraction
};

namespace detail {
inline void check_pair(const Points3& a, const Points3& b) {
  if (a.rows() != b.rows()) fail(ErrorCode::Shape, "joint counts differ");
  if (a.rows() == 0) fail(ErrorCode::Shape, "empty joint set");
}
}  // namespace detail

/// Mean per-joint Euclidean distance. Inputs are expected root-centered.
inline double mpjpe(const Points3& pred, const Points3& gt) {
  detail::check_pair(pred, gt);
  return (pred - gt).rowwise().norm().mean();
}

/// MPJPE after similarity alignment of the prediction onto the ground truth.
inline double pmpjpe(const Points3& pred, const Points3& gt) {
  detail::check_pair(pred, gt);
  return mpjpe(procrustes_align(pred, gt).aligned, gt);
}

/// Per-vertex error; same computation as MPJPE over mesh vertices.
inline double pve(const Points3& pred_vertices, const Points3& gt_vertices) {
  return mpjpe(pred_vertices, gt_vertices);
}

inline std::vector<double> default_pck_thresholds() {
  std::vector<double> t;
  for (int mm = 0; mm <= 150; mm += 5) t.push_back(mm);
  return t;
}

struct PckAuc {
  double pck = 0.0;  // at the largest threshold
  double auc = 0.0;  // mean PCK over all thresholds
};

/// A joint is correct when its error is at most the threshold.
inline PckAuc pck_auc(const Points3& pred, const Points3& gt, std::span<const double> thresholds) {
  detail::check_pair(pred, gt);
  if (thresholds.empty()) fail(ErrorCode::InvalidArgument, "PCK needs at least one threshold");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    fail(ErrorCode::InvalidArgument, "PCK thresholds must be ascending");
  const Eigen::VectorXd err = (pred - gt).rowwise().norm();
  auto pck_at = [&](double tau) {
    return static_cast<double>((err.array() <= tau).count()) / static_cast<double>(err.size());
  };
  PckAuc out;
  double sum = 0.0;
  for (double t : thresholds) sum += pck_at(t);
  out.auc = sum / static_cast<double>(thresholds.size());
  out.pck = pck_at(thresholds.back());
  return out;
}

namespace detail {
inline void check_rotations(std::span<const Mat3> a, std::span<const Mat3> b) {
  if (a.size() != b.size() || a.empty()) fail(ErrorCode::Shape, "rotation counts differ");
  for (const auto& R : a)
    if (!is_rotation(R)) fail(ErrorCode::NotOrthonormal, "input is not a rotation matrix");
  for (const auto& R : b)
    if (!is_rotation(R)) fail(ErrorCode::NotOrthonormal, "input is not a rotation matrix");
}
inline double to_degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
}  // namespace detail

/// Mean geodesic angle between corresponding rotations, in degrees.
inline double mpjae(std::span<const Mat3> pred, std::span<const Mat3> gt) {
  detail::check_rotations(pred, gt);
  double sum = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j) sum += geodesic_angle(pred[j], gt[j]);
  return detail::to_degrees(sum / static_cast<double>(pred.size()));
}

/// MPJAE after rotating every predicted rotation by the global rotation that
/// maps the predicted root onto the ground-truth root.
inline double pa_mpjae(std::span<const Mat3> pred, std::span<const Mat3> gt) {
  detail::check_rotations(pred, gt);
  const Mat3 align = gt[0] * pred[0].transpose();
  std::vector<Mat3> aligned;
  aligned.reserve(pred.size());
  for (const auto& R : pred) aligned.push_back(align * R);
  return mpjae(aligned, gt);
}

/// One person's 2D skeleton; `score` is only used for predictions.
struct Pose2D {
  Points2 joints;
  std::vector<bool> visible;
  double score = 1.0;
};

inline constexpr double kDefaultOksSigma = 0.07;

/// Object keypoint similarity against a ground-truth skeleton. The object
/// scale is the area of the bounding box of the visible GT joints.
inline double oks(const Points2& pred, const Pose2D& gt, std::span<const double> sigmas) {
  if (pred.rows() != gt.joints.rows() || sigmas.size() != static_cast<std::size_t>(pred.rows()))
    fail(ErrorCode::Shape, "OKS inputs disagree in joint count");
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  int n = 0;
  for (Eigen::Index j = 0; j < gt.joints.rows(); ++j) {
    if (!gt.visible[static_cast<std::size_t>(j)]) continue;
    lo = lo.cwiseMin(gt.joints.row(j).transpose());
    hi = hi.cwiseMax(gt.joints.row(j).transpose());
    ++n;
  }
  if (n == 0) return 0.0;
  const double area = (hi - lo).prod() + 1e-9;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < gt.joints.rows(); ++j) {
    if (!gt.visible[static_cast<std::size_t>(j)]) continue;
    const double kappa = 2.0 * sigmas[static_cast<std::size_t>(j)];
    const double d2 = (pred.row(j) - gt.joints.row(j)).squaredNorm();
    sum += std::exp(-d2 / (2.0 * area * kappa * kappa));
  }
  return sum / n;
}

/// Average precision at OKS >= threshold, pooled over images. Predictions
/// are visited by descending score; each one takes the unmatched GT with the
/// highest OKS in its image. AP is the area under the all-point
/// interpolated precision-recall curve. With no GT at all the result is 1
/// when there are also no predictions and 0 otherwise.
inline double average_precision(const std::vector<std::vector<Pose2D>>& preds,
                                const std::vector<std::vector<Pose2D>>& gts,
                                std::span<const double> sigmas, double threshold = 0.5) {
  if (preds.size() != gts.size()) fail(ErrorCode::Shape, "prediction/GT image counts differ");
  std::size_t n_gt = 0, n_pred = 0;
  for (const auto& g : gts) n_gt += g.size();
  for (const auto& p : preds) n_pred += p.size();
  if (n_gt == 0) return n_pred == 0 ? 1.0 : 0.0;
  if (n_pred == 0) return 0.0;

  struct Ref {
    double score;
    std::size_t image;
    std::size_t index;
  };
  std::vector<Ref> order;
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t k = 0; k < preds[i].size(); ++k) order.push_back({preds[i][k].score, i, k});
  std::stable_sort(order.begin(), order.end(),
                   [](const Ref& a, const Ref& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> used(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) used[i].assign(gts[i].size(), false);

  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t n = 0; n < order.size(); ++n) {
    const auto& ref = order[n];
    const Pose2D& det = preds[ref.image][ref.index];
    int best = -1;
    double best_oks = -1.0;
    for (std::size_t g = 0; g < gts[ref.image].size(); ++g) {
      if (used[ref.image][g]) continue;
      const double s = oks(det.joints, gts[ref.image][g], sigmas);
      if (s >= threshold && s > best_oks) {
        best_oks = s;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[ref.image][static_cast<std::size_t>(best)] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(n + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }

  // Precision envelope, then integrate over recall steps.
  for (std::size_t i = precision.size() - 1; i > 0; --i)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

inline double ap50(const std::vector<Pose2D>& preds, const std::vector<Pose2D>& gts,
                   std::span<const double> sigmas) {
  return average_precision({preds}, {gts}, sigmas, 0.5);
}

}  // namespace meshmap
