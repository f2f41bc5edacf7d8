#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "meshmap/body_model.hpp"
#include "meshmap/error.hpp"
#include "meshmap/tensor_io.hpp"

namespace meshmap {

/// Gaussian mixture over the flattened 6D rotations of joints 1..K-1 (the
/// global orientation is excluded), plus a squared-norm penalty on shape.
///
/// The pose part is the max-mixture surrogate of the negative log density:
///   min_k [ 0.5 (x - mu_k)^T S_k^-1 (x - mu_k) + 0.5 log det(2 pi S_k) - log w_k ]
class GmmPrior {
 public:
  GmmPrior(Eigen::VectorXd weights, Eigen::MatrixXd means, std::vector<Eigen::MatrixXd> covariances,
           double shape_weight = 1.0)
      : weights_(std::move(weights)), means_(std::move(means)), shape_weight_(shape_weight) {
    const auto n = weights_.size();
    if (n == 0) fail(ErrorCode::InvalidPrior, "prior needs at least one component");
    if (means_.rows() != n || static_cast<Eigen::Index>(covariances.size()) != n)
      fail(ErrorCode::InvalidPrior, "prior component counts disagree");
    if (weights_.minCoeff() <= 0.0 || std::abs(weights_.sum() - 1.0) > 1e-6)
      fail(ErrorCode::InvalidPrior, "prior weights must be positive and sum to 1");
    if (!(shape_weight_ >= 0.0)) fail(ErrorCode::InvalidPrior, "shape weight must be non-negative");
    const auto D = means_.cols();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::MatrixXd& S = covariances[static_cast<std::size_t>(k)];
      if (S.rows() != D || S.cols() != D)
        fail(ErrorCode::InvalidPrior, "covariance has wrong dims");
      if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, S.cwiseAbs().maxCoeff()))
        fail(ErrorCode::InvalidPrior, "covariance is not symmetric");
      Eigen::LLT<Eigen::MatrixXd> llt(S);
      if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
        fail(ErrorCode::InvalidPrior, "covariance is not positive definite");
      const Eigen::MatrixXd L = llt.matrixL();
      const double log_det = 2.0 * L.diagonal().array().log().sum();
      precisions_.push_back(llt.solve(Eigen::MatrixXd::Identity(D, D)));
      constants_.push_back(0.5 * (static_cast<double>(D) * std::log(2.0 * std::numbers::pi) + log_det) -
                           std::log(weights_(k)));
    }
    covariances_ = std::move(covariances);
  }

  /// Single unit-covariance component centered on the rest pose (identity
  /// rotations for every joint).
  static GmmPrior standard_normal(int pose_joints = kPosedJoints - 1) {
    Eigen::MatrixXd mean(1, 6 * pose_joints);
    for (int j = 0; j < pose_joints; ++j)
      for (int d = 0; d < 6; ++d) mean(0, 6 * j + d) = kIdentity6d[static_cast<std::size_t>(d)];
    return GmmPrior(Eigen::VectorXd::Ones(1), mean,
                    {Eigen::MatrixXd::Identity(6 * pose_joints, 6 * pose_joints)});
  }

  int components() const { return static_cast<int>(weights_.size()); }
  int dim() const { return static_cast<int>(means_.cols()); }
  double shape_weight() const { return shape_weight_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& means() const { return means_; }
  const std::vector<Eigen::MatrixXd>& covariances() const { return covariances_; }
  double constant(int k) const { return constants_[static_cast<std::size_t>(k)]; }

  struct PoseTerm {
    double value = 0.0;
    int component = 0;
  };

  PoseTerm pose_term(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) fail(ErrorCode::Shape, "pose vector does not match prior dimension");
    PoseTerm best{std::numeric_limits<double>::infinity(), 0};
    for (int k = 0; k < components(); ++k) {
      const Eigen::VectorXd d = x - means_.row(k).transpose();
      const double v = 0.5 * d.dot(precisions_[static_cast<std::size_t>(k)] * d) + constant(k);
      if (v < best.value) best = {v, k};
    }
    return best;
  }

  Eigen::VectorXd pose_gradient(const Eigen::VectorXd& x) const {
    const int k = pose_term(x).component;
    return precisions_[static_cast<std::size_t>(k)] * (x - means_.row(k).transpose());
  }

  TensorFile to_tensors() const {
    TensorFile f;
    const auto n = static_cast<std::uint32_t>(components());
    const auto D = static_cast<std::uint32_t>(dim());
    std::vector<float> w, mu, cov;
    for (int k = 0; k < components(); ++k) {
      w.push_back(static_cast<float>(weights_(k)));
      for (int i = 0; i < dim(); ++i) mu.push_back(static_cast<float>(means_(k, i)));
      for (int i = 0; i < dim(); ++i)
        for (int j = 0; j < dim(); ++j)
          cov.push_back(static_cast<float>(covariances_[static_cast<std::size_t>(k)](i, j)));
    }
    f.add("weights", Tensor({n}, std::move(w)));
    f.add("means", Tensor({n, D}, std::move(mu)));
    f.add("covariances", Tensor({n, D, D}, std::move(cov)));
    return f;
  }

  static GmmPrior from_tensors(const TensorFile& f) {
    const Tensor& w = f.at("weights");
    const Tensor& mu = f.at("means");
    const Tensor& cov = f.at("covariances");
    if (w.rank() != 1 || mu.rank() != 2 || cov.rank() != 3 || mu.dims[0] != w.dims[0] ||
        cov.dims[0] != w.dims[0] || cov.dims[1] != mu.dims[1] || cov.dims[2] != mu.dims[1])
      fail(ErrorCode::Load, "prior tensors have inconsistent dims");
    const auto n = static_cast<Eigen::Index>(w.dims[0]);
    const auto D = static_cast<Eigen::Index>(mu.dims[1]);
    Eigen::VectorXd weights(n);
    Eigen::MatrixXd means(n, D);
    std::vector<Eigen::MatrixXd> covs;
    for (Eigen::Index k = 0; k < n; ++k) {
      weights(k) = w.data[static_cast<std::size_t>(k)];
      for (Eigen::Index i = 0; i < D; ++i) means(k, i) = mu.data[static_cast<std::size_t>(k * D + i)];
      Eigen::MatrixXd S(D, D);
      for (Eigen::Index i = 0; i < D; ++i)
        for (Eigen::Index j = 0; j < D; ++j)
          S(i, j) = cov.data[static_cast<std::size_t>((k * D + i) * D + j)];
      covs.push_back(std::move(S));
    }
    // Weights stored as f32 may miss 1 by a few ulps.
    weights /= weights.sum();
    return GmmPrior(std::move(weights), std::move(means), std::move(covs));
  }

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  std::vector<Eigen::MatrixXd> covariances_;
  std::vector<Eigen::MatrixXd> precisions_;
  std::vector<double> constants_;
  double shape_weight_;
};

/// Pose rotations of joints 1..K-1 flattened into one vector.
inline Eigen::VectorXd prior_pose_vector(const PoseParams& pose) {
  if (pose.joint_count() < 1) fail(ErrorCode::Shape, "empty pose");
  Eigen::VectorXd x(6 * (pose.joint_count() - 1));
  for (int j = 1; j < pose.joint_count(); ++j)
    for (int d = 0; d < 6; ++d) x(6 * (j - 1) + d) = pose.rot6d[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
  return x;
}

inline double gmm_prior_loss(const PoseParams& pose, const ShapeParams& shape, const GmmPrior& prior) {
  double shape_sq = 0.0;
  for (double b : shape.beta) shape_sq += b * b;
  return prior.pose_term(prior_pose_vector(pose)).value + prior.shape_weight() * shape_sq;
}

struct PriorGradient {
  std::vector<Rot6d> pose;  // entry 0 (global orientation) is always zero
  ShapeParams shape;
};

inline PriorGradient gmm_prior_loss_grad(const PoseParams& pose, const ShapeParams& shape,
                                         const GmmPrior& prior) {
  PriorGradient g;
  g.pose.assign(pose.rot6d.size(), Rot6d{});
  const Eigen::VectorXd gp = prior.pose_gradient(prior_pose_vector(pose));
  for (int j = 1; j < pose.joint_count(); ++j)
    for (int d = 0; d < 6; ++d) g.pose[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)] = gp(6 * (j - 1) + d);
  for (int b = 0; b < kShapeDims; ++b)
    g.shape.beta[static_cast<std::size_t>(b)] = 2.0 * prior.shape_weight() * shape.beta[static_cast<std::size_t>(b)];
  return g;
}

inline GmmPrior load_prior(const std::string& path) { return GmmPrior::from_tensors(load_rmtf(path)); }

inline void save_prior(const std::string& path, const GmmPrior& prior) {
  save_rmtf(path, prior.to_tensors());
}

}  // namespace meshmap
