#include <random>

#include <gtest/gtest.h>

#include "meshmap/decode.hpp"
#include "oracles.hpp"

using namespace meshmap;

namespace {

CenterHeatmap random_map(std::mt19937_64& rng, int levels) {
  CenterHeatmap m(24, 24);
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c) {
      // Coarse quantization produces plateaus and ties.
      const double v = std::floor(oracle::uni(rng, 0, levels)) / (levels - 1);
      m.at(r, c) = std::min(v, 1.0);
    }
  return m;
}

void expect_same(const std::vector<Peak>& a, const std::vector<Peak>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].cell, b[i].cell);
    EXPECT_EQ(a[i].confidence, b[i].confidence);
  }
}

}  // namespace

TEST(ParsePeaks, SingleGaussian) {
  const std::vector<CenterSpec> s = {{Vec2(40, 20), 3}};
  const auto peaks = parse_peaks(render_heatmap(s, 64, 64));
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].cell, (Cell{20, 40}));
  EXPECT_EQ(peaks[0].confidence, 1.0);
}

TEST(ParsePeaks, TwoGaussiansMatchBruteForce) {
  const std::vector<CenterSpec> s = {{Vec2(20, 30), 4}, {Vec2(40, 30), 4}};
  const auto m = render_heatmap(s, 64, 64);
  const auto peaks = parse_peaks(m);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_EQ(peaks[0].cell, (Cell{30, 20}));
  EXPECT_EQ(peaks[1].cell, (Cell{30, 40}));
  expect_same(peaks, oracle::brute_force_peaks(m, 0.25, 64));
}

TEST(ParsePeaks, ZeroMapIsEmpty) { EXPECT_TRUE(parse_peaks(CenterHeatmap(64, 64)).empty()); }

TEST(ParsePeaks, MatchesBruteForceOnRandomMaps) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto m = random_map(rng, 2 + t % 6);
    const double thr = t % 3 == 0 ? 0.0 : 0.25;
    const int n = t % 4 == 0 ? 5 : 64;
    expect_same(parse_peaks(m, thr, n), oracle::brute_force_peaks(m, thr, n));
  }
}

TEST(ParsePeaks, PlateauYieldsFirstCell) {
  CenterHeatmap m(8, 8);
  m.at(3, 3) = m.at(3, 4) = m.at(4, 3) = m.at(4, 4) = 0.8;
  const auto p = parse_peaks(m);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].cell, (Cell{3, 3}));
}

TEST(ParsePeaks, ThresholdIsStrict) {
  CenterHeatmap m(8, 8);
  m.at(2, 2) = 0.25;
  m.at(5, 5) = 0.2500001;
  const auto p = parse_peaks(m);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].cell, (Cell{5, 5}));
  EXPECT_EQ(kDefaultCenterThreshold, 0.25);
  EXPECT_EQ(kDefaultMaxPeople, 64);
}

TEST(ParsePeaks, TopNKeepsStrongest) {
  // 70 separated peaks with distinct heights.
  CenterHeatmap m(64, 64);
  std::vector<double> heights;
  int i = 0;
  for (int r = 1; r < 64 && i < 70; r += 6)
    for (int c = 1; c < 64 && i < 70; c += 6, ++i) {
      const double h = 0.3 + 0.01 * ((i * 37) % 70);
      m.at(r, c) = h;
      heights.push_back(h);
    }
  ASSERT_EQ(heights.size(), 70u);
  const auto p = parse_peaks(m);
  ASSERT_EQ(p.size(), 64u);
  std::sort(heights.rbegin(), heights.rend());
  for (int k = 0; k < 64; ++k) EXPECT_EQ(p[k].confidence, heights[k]);
}

TEST(SampleParams, ConstantChannels) {
  MeshParamMap pm(8, 8);
  for (int ch = 0; ch < kMeshParamChannels; ++ch)
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) pm.at(ch, r, c) = 0.5 + ch;
  const auto v = sample_params(pm, {3, 5}).to_vector();
  for (int ch = 0; ch < kMeshParamChannels; ++ch) EXPECT_EQ(v[ch], 0.5 + ch);
}

TEST(SampleParams, OutOfBoundsIsBoundsError) {
  MeshParamMap pm(8, 8);
  try {
    sample_params(pm, {8, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Bounds);
  }
}

TEST(MatchToGt, IdenticalSets) {
  const std::vector<Vec2> a = {Vec2(1, 2), Vec2(10, 10), Vec2(30, 5)};
  const auto m = match_to_gt(a, a);
  EXPECT_EQ(m.pred_to_gt, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(m.cost, 0.0);
}

TEST(MatchToGt, NearestWins) {
  const std::vector<Vec2> p = {Vec2(10, 10)}, g = {Vec2(11, 10), Vec2(40, 40)};
  const auto m = match_to_gt(p, g);
  EXPECT_EQ(m.pred_to_gt[0], 0);
  EXPECT_EQ(m.gt_to_pred[1], -1);
}

TEST(MatchToGt, GreedyGlobalOrder) {
  const std::vector<Vec2> p = {Vec2(0, 0), Vec2(1, 0)}, g = {Vec2(0.4, 0)};
  const auto m = match_to_gt(p, g);
  EXPECT_EQ(m.pred_to_gt, (std::vector<int>{0, -1}));
  EXPECT_EQ(m.matched(), 1);
}

TEST(DepthOrder, LargerScaleInFront) {
  std::vector<Detection> d(2);
  d[0].params.cam.s = 1.0;
  d[1].params.cam.s = 2.0;
  EXPECT_EQ(depth_order(d), (std::vector<int>{1, 0}));
}

TEST(DepthOrder, SimilarScaleUsesConfidence) {
  std::vector<Detection> d(2);
  d[0].params.cam.s = 1.00;
  d[0].confidence = 0.9;
  d[1].params.cam.s = 1.02;
  d[1].confidence = 0.5;
  EXPECT_EQ(depth_order(d), (std::vector<int>{0, 1}));
}

TEST(DepthOrder, SingleDetection) {
  std::vector<Detection> d(1);
  EXPECT_EQ(depth_order(d), (std::vector<int>{0}));
}

TEST(DecodeMaps, EmptyHeatmapGivesNothing) {
  EXPECT_TRUE(decode_maps(CenterHeatmap(64, 64), MeshParamMap(64, 64)).empty());
  const auto body = make_toy_model(120, kPosedJoints, 0);
  EXPECT_TRUE(decode_scene(CenterHeatmap(64, 64), MeshParamMap(64, 64), body).empty());
}

TEST(DecodeMaps, SizeMismatchRejected) {
  EXPECT_THROW(decode_maps(CenterHeatmap(64, 64), MeshParamMap(32, 32)), Error);
}

TEST(DecodeMaps, DepthRanksArePermutation) {
  std::vector<CenterSpec> s = {{Vec2(10, 10), 2}, {Vec2(30, 10), 2}, {Vec2(50, 50), 2}};
  const auto cm = render_heatmap(s, 64, 64);
  MeshParamMap pm(64, 64);
  const double scales[3] = {0.3, 0.9, 0.5};
  for (int i = 0; i < 3; ++i) {
    const Cell c = nearest_cell(s[i].center);
    pm.at(0, c.row, c.col) = scales[i];
    for (int ch = 3; ch < kMeshParamChannels; ++ch) pm.at(ch, c.row, c.col) = MeshParams{}.to_vector()[ch];
  }
  const auto d = decode_maps(cm, pm);
  ASSERT_EQ(d.size(), 3u);
  for (const auto& x : d) {
    if (x.params.cam.s == 0.9) {
      EXPECT_EQ(x.depth_rank, 0);
    }
    if (x.params.cam.s == 0.5) {
      EXPECT_EQ(x.depth_rank, 1);
    }
    if (x.params.cam.s == 0.3) {
      EXPECT_EQ(x.depth_rank, 2);
    }
  }
}
