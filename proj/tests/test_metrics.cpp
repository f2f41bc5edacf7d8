#include <random>

#include <gtest/gtest.h>

#include "meshmap/metrics.hpp"
#include "oracles.hpp"

using namespace meshmap;

namespace {

Pose2D skeleton(std::mt19937_64& rng, double cx, double cy, double score = 1.0) {
  Pose2D p;
  p.joints.resize(8, 2);
  for (int j = 0; j < 8; ++j) {
    p.joints(j, 0) = cx + oracle::uni(rng, -5, 5);
    p.joints(j, 1) = cy + oracle::uni(rng, -8, 8);
  }
  p.visible.assign(8, true);
  p.score = score;
  return p;
}

const std::vector<double> kSig(8, kDefaultOksSigma);

std::vector<Mat3> random_rotations(std::mt19937_64& rng, int n) {
  std::vector<Mat3> r;
  for (int i = 0; i < n; ++i) r.push_back(oracle::random_rotation(rng));
  return r;
}

}  // namespace

TEST(Mpjpe, ZeroAndTranslation) {
  std::mt19937_64 rng(1);
  const Points3 g = oracle::random_points(rng, 10, 500);
  EXPECT_EQ(mpjpe(g, g), 0.0);
  const Points3 p = g.rowwise() + Eigen::RowVector3d(10, 0, 0);
  EXPECT_NEAR(mpjpe(p.rowwise() - p.row(0), g.rowwise() - g.row(0)), 0.0, 1e-12);
}

TEST(Mpjpe, ThreeJointHandValue) {
  Points3 p(3, 3), g = Points3::Zero(3, 3);
  p << 3, 4, 0, 0, 0, 1, 1, 2, 2;
  EXPECT_NEAR(mpjpe(p, g), (5.0 + 1.0 + 3.0) / 3.0, 1e-12);
}

TEST(Pmpjpe, RotationAndScaleAbsorbed) {
  std::mt19937_64 rng(2);
  const Points3 g = oracle::random_points(rng, 10, 500);
  EXPECT_LT(pmpjpe(g * oracle::random_rotation(rng).transpose(), g), 1e-9);
  EXPECT_LT(pmpjpe(1.1 * g, g), 1e-9);
}

TEST(Pmpjpe, AlignmentNoWorseThanRotationGrid) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Points3 p = oracle::random_points(rng, 8, 100), g = oracle::random_points(rng, 8, 100);
    const Points3 pc = p.rowwise() - p.colwise().mean(), gc = g.rowwise() - g.colwise().mean();
    double best = std::numeric_limits<double>::infinity();
    const int n = 12;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          const Mat3 R = axis_angle_to_matrix(Vec3(0, 0, 2 * M_PI * a / n)) *
                         axis_angle_to_matrix(Vec3(0, M_PI * b / n, 0)) *
                         axis_angle_to_matrix(Vec3(0, 0, 2 * M_PI * c / n));
          const Points3 r = pc * R.transpose();
          const double s = std::max(0.0, (r.array() * gc.array()).sum() / r.squaredNorm());
          best = std::min(best, (s * r - gc).squaredNorm());
        }
    EXPECT_LE(procrustes_align(p, g).residual, best + 1e-9);
  }
}

TEST(Pmpjpe, NeverAboveMpjpe) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    Points3 p = oracle::random_points(rng, 12, 300), g = oracle::random_points(rng, 12, 300);
    p = p.rowwise() - p.row(0);
    g = g.rowwise() - g.row(0);
    EXPECT_LE(pmpjpe(p, g), mpjpe(p, g) + 1e-9);
  }
}

TEST(PckAuc, Cases) {
  const auto thr = default_pck_thresholds();
  ASSERT_EQ(thr.size(), 31u);
  std::mt19937_64 rng(5);
  const Points3 g = oracle::random_points(rng, 10, 500);
  auto r = pck_auc(g, g, thr);
  EXPECT_EQ(r.pck, 1.0);
  EXPECT_EQ(r.auc, 1.0);
  r = pck_auc(g.rowwise() + Eigen::RowVector3d(200, 0, 0), g, thr);
  EXPECT_EQ(r.pck, 0.0);
  Points3 p = g;
  for (int j = 0; j < 10; ++j) p(j, 1) += j % 2 ? 10.0 : 1000.0;
  EXPECT_EQ(pck_auc(p, g, thr).pck, 0.5);
}

TEST(PckAuc, MonotoneAndBounded) {
  std::mt19937_64 rng(6);
  const Points3 p = oracle::random_points(rng, 20, 100), g = oracle::random_points(rng, 20, 100);
  const auto thr = default_pck_thresholds();
  double prev = -1;
  for (double t : thr) {
    const double v = pck_auc(p, g, std::vector<double>{t}).pck;
    EXPECT_GE(v, prev);
    prev = v;
  }
  const auto r = pck_auc(p, g, thr);
  EXPECT_GE(r.auc, pck_auc(p, g, std::vector<double>{0.0}).pck);
  EXPECT_LE(r.auc, r.pck);
}

TEST(Mpjae, KnownQuarterTurn) {
  std::vector<Mat3> gt(22, Mat3::Identity()), pred = gt;
  pred[5] = axis_angle_to_matrix(Vec3(0, 0, M_PI / 2));
  EXPECT_NEAR(mpjae(pred, gt) * 22, 90.0, 1e-6);
  const std::vector<Mat3> one_p = {pred[5]}, one_g = {Mat3::Identity()};
  EXPECT_NEAR(mpjae(one_p, one_g), 90.0, 1e-6);
  EXPECT_EQ(mpjae(gt, gt), 0.0);
}

TEST(Mpjae, MatchesQuaternionOracleAndIsSymmetric) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_rotations(rng, 22), b = random_rotations(rng, 22);
    double sum = 0;
    for (int j = 0; j < 22; ++j) sum += oracle::quaternion_angle_deg(a[j], b[j]);
    EXPECT_NEAR(mpjae(a, b), sum / 22, 1e-6);
    EXPECT_NEAR(mpjae(a, b), mpjae(b, a), 1e-9);
  }
}

TEST(Mpjae, AlignedVersionRemovesGlobalRotation) {
  std::mt19937_64 rng(8);
  const auto g = random_rotations(rng, 22);
  const Mat3 Q = oracle::random_rotation(rng);
  std::vector<Mat3> p;
  for (const auto& R : g) p.push_back(Q * R);
  EXPECT_LT(pa_mpjae(p, g), 1e-6);
  EXPECT_GT(mpjae(p, g), 1.0);
}

TEST(Mpjae, NonRotationRejected) {
  std::vector<Mat3> a = {Mat3::Identity() * 2.0}, b = {Mat3::Identity()};
  try {
    mpjae(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotOrthonormal);
  }
}

TEST(Ap50, PerfectAndEmpty) {
  std::mt19937_64 rng(9);
  std::vector<Pose2D> gts = {skeleton(rng, 10, 10), skeleton(rng, 40, 30)};
  EXPECT_EQ(ap50(gts, gts, kSig), 1.0);
  EXPECT_EQ(ap50({}, gts, kSig), 0.0);
  EXPECT_EQ(ap50({}, {}, kSig), 1.0);
  EXPECT_EQ(ap50(gts, {}, kSig), 0.0);
}

TEST(Ap50, OnePerfectOneFarHalf) {
  std::mt19937_64 rng(10);
  std::vector<Pose2D> gts = {skeleton(rng, 10, 10), skeleton(rng, 40, 30)};
  Pose2D perfect = gts[0];
  perfect.score = 0.9;
  Pose2D far = skeleton(rng, 200, 200, 0.5);
  const std::vector<Pose2D> preds = {far, perfect};
  const double ap = ap50(preds, gts, kSig);
  EXPECT_NEAR(ap, oracle::pr_area({{0.5, 1.0}, {0.5, 0.5}}), 1e-12);
  EXPECT_NEAR(ap, 0.5, 1e-12);
}

TEST(Ap50, MatchesHandCurveOnMixedRanking) {
  std::mt19937_64 rng(11);
  std::vector<Pose2D> gts;
  for (int i = 0; i < 4; ++i) gts.push_back(skeleton(rng, 20 + 40 * i, 20));
  // Ranked: hit, miss, hit, hit, miss.
  std::vector<Pose2D> preds = {gts[0], skeleton(rng, 500, 500), gts[1], gts[2], skeleton(rng, 900, 900)};
  const double scores[5] = {0.9, 0.8, 0.7, 0.6, 0.5};
  for (int i = 0; i < 5; ++i) preds[i].score = scores[i];
  const double hand = oracle::pr_area({{0.25, 1.0}, {0.25, 0.5}, {0.5, 2.0 / 3}, {0.75, 0.75}, {0.75, 0.6}});
  EXPECT_NEAR(ap50(preds, gts, kSig), hand, 1e-12);
}

TEST(Ap50, ScoreRescalingInvariant) {
  std::mt19937_64 rng(12);
  std::vector<Pose2D> gts, preds;
  for (int i = 0; i < 5; ++i) {
    gts.push_back(skeleton(rng, 30 * i, 10));
    Pose2D p = gts.back();
    p.joints.array() += oracle::uni(rng, -3, 3);
    p.score = oracle::uni(rng, 0.1, 1);
    preds.push_back(p);
  }
  const double a = ap50(preds, gts, kSig);
  for (auto& p : preds) p.score *= 7.5;
  EXPECT_EQ(ap50(preds, gts, kSig), a);
}

TEST(Oks, IdenticalIsOneAndDecays) {
  std::mt19937_64 rng(13);
  const Pose2D g = skeleton(rng, 30, 30);
  EXPECT_NEAR(oks(g.joints, g, kSig), 1.0, 1e-12);
  Points2 shifted = g.joints;
  shifted.col(0).array() += 2.0;
  const double near = oks(shifted, g, kSig);
  shifted.col(0).array() += 5.0;
  EXPECT_LT(oks(shifted, g, kSig), near);
}
