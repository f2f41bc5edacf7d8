#include <random>

#include <gtest/gtest.h>

#include "meshmap/camera.hpp"
#include "oracles.hpp"

using namespace meshmap;

TEST(Camera, IdentityCameraDropsDepth) {
  Points3 j(1, 3);
  j << 0.3, -0.2, 5.0;
  const Points2 p = project(j, {1, 0, 0});
  EXPECT_DOUBLE_EQ(p(0, 0), 0.3);
  EXPECT_DOUBLE_EQ(p(0, 1), -0.2);
}

TEST(Camera, ScaleAndTranslation) {
  Points3 j(1, 3);
  j << 0.4, 0.4, 1.0;
  const Points2 p = project(j, {0.5, 0.1, -0.1});
  EXPECT_NEAR(p(0, 0), 0.3, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.1, 1e-15);
}

TEST(Camera, LinearWithoutTranslation) {
  std::mt19937_64 rng(1);
  const Points3 X = oracle::random_points(rng, 8);
  const CameraParams cam{2.0, 0.0, 0.0};
  EXPECT_TRUE(project(-X, cam).isApprox(-project(X, cam)));
  EXPECT_TRUE(project(3.0 * X, cam).isApprox(3.0 * project(X, cam)));
}

TEST(Camera, NormalizedToHeatmapPoints) {
  auto p = normalized_to_heatmap(0, 0, 64, 64);
  EXPECT_DOUBLE_EQ(p.x, 31.5);
  EXPECT_DOUBLE_EQ(p.y, 31.5);
  EXPECT_FALSE(p.out_of_frame);
  p = normalized_to_heatmap(-1, -1, 64, 64);
  EXPECT_DOUBLE_EQ(p.x, 0.0);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
  p = normalized_to_heatmap(1, 0, 64, 64);
  EXPECT_DOUBLE_EQ(p.x, 63.0);
  EXPECT_DOUBLE_EQ(p.y, 31.5);
  EXPECT_TRUE(normalized_to_heatmap(1.2, 0, 64, 64).out_of_frame);
}

TEST(Camera, PixelRoundTrip) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const double x = oracle::uni(rng, -1, 1), y = oracle::uni(rng, -1, 1);
    const auto p = normalized_to_heatmap(x, y, 64, 64);
    const auto n = heatmap_to_normalized(p.x, p.y, 64, 64);
    EXPECT_NEAR(n.x(), x, 1e-9);
    EXPECT_NEAR(n.y(), y, 1e-9);
  }
}
