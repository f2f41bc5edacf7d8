#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "meshmap/body_model.hpp"
#include "meshmap/camera.hpp"
#include "meshmap/center_map.hpp"
#include "meshmap/error.hpp"
#include "meshmap/maps.hpp"

namespace meshmap {

inline constexpr double kDefaultCenterThreshold = 0.25;
inline constexpr int kDefaultMaxPeople = 64;
inline constexpr double kDefaultSimilarScale = 0.1;

struct Peak {
  Cell cell;
  double confidence = 0.0;
};

/// 3x3 max pooling, stride 1, same padding (out-of-map cells ignored).
inline std::vector<double> max_pool3x3(const CenterHeatmap& cm) {
  const int H = cm.height(), W = cm.width();
  std::vector<double> rows(static_cast<std::size_t>(H * W));
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      double m = cm.at(r, c);
      if (c > 0) m = std::max(m, cm.at(r, c - 1));
      if (c + 1 < W) m = std::max(m, cm.at(r, c + 1));
      rows[static_cast<std::size_t>(r * W + c)] = m;
    }
  std::vector<double> pooled(rows.size());
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const auto i = static_cast<std::size_t>(r * W + c);
      double m = rows[i];
      if (r > 0) m = std::max(m, rows[i - static_cast<std::size_t>(W)]);
      if (r + 1 < H) m = std::max(m, rows[i + static_cast<std::size_t>(W)]);
      pooled[i] = m;
    }
  return pooled;
}

/// Local maxima of the heatmap above `threshold`, strongest first, at most
/// `max_n`. A plateau inside one 3x3 window yields only its
/// lexicographically smallest (row, col) cell. Thresholding happens before
/// the top-N cut.
inline std::vector<Peak> parse_peaks(const CenterHeatmap& cm,
                                     double threshold = kDefaultCenterThreshold,
                                     int max_n = kDefaultMaxPeople) {
  const int H = cm.height(), W = cm.width();
  const auto pooled = max_pool3x3(cm);
  std::vector<Peak> peaks;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const double v = cm.at(r, c);
      if (!(v > threshold) || v != pooled[static_cast<std::size_t>(r * W + c)]) continue;
      // Equal neighbors that precede this cell win the tie.
      const bool beaten = (r > 0 && c > 0 && cm.at(r - 1, c - 1) == v) ||
                          (r > 0 && cm.at(r - 1, c) == v) ||
                          (r > 0 && c + 1 < W && cm.at(r - 1, c + 1) == v) ||
                          (c > 0 && cm.at(r, c - 1) == v);
      if (!beaten) peaks.push_back({{r, c}, v});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.confidence > b.confidence; });
  if (max_n >= 0 && peaks.size() > static_cast<std::size_t>(max_n))
    peaks.resize(static_cast<std::size_t>(max_n));
  return peaks;
}

/// Cell-exact read of the parameter vector; no interpolation.
inline MeshParams sample_params(const MeshParamMap& pm, Cell center) {
  if (!pm.contains(center)) fail(ErrorCode::Bounds, "sample center lies outside the map");
  return MeshParams::from_vector(pm.cell(center.row, center.col));
}

struct Assignment {
  std::vector<int> pred_to_gt;  // -1: false positive
  std::vector<int> gt_to_pred;  // -1: missed
  double cost = 0.0;            // summed distance of matched pairs

  int matched() const {
    return static_cast<int>(std::count_if(pred_to_gt.begin(), pred_to_gt.end(),
                                          [](int g) { return g >= 0; }));
  }
};

/// Greedy one-to-one matching: the globally closest unmatched
/// prediction/ground-truth pair is fixed first. Ties resolve to the lower
/// (pred, gt) index pair.
inline Assignment match_to_gt(std::span<const Vec2> pred, std::span<const Vec2> gt) {
  struct Candidate {
    double dist;
    int p;
    int g;
  };
  std::vector<Candidate> all;
  all.reserve(pred.size() * gt.size());
  for (std::size_t p = 0; p < pred.size(); ++p)
    for (std::size_t g = 0; g < gt.size(); ++g)
      all.push_back({(pred[p] - gt[g]).norm(), static_cast<int>(p), static_cast<int>(g)});
  std::stable_sort(all.begin(), all.end(),
                   [](const Candidate& a, const Candidate& b) { return a.dist < b.dist; });

  Assignment a;
  a.pred_to_gt.assign(pred.size(), -1);
  a.gt_to_pred.assign(gt.size(), -1);
  for (const auto& c : all) {
    if (a.pred_to_gt[static_cast<std::size_t>(c.p)] >= 0 ||
        a.gt_to_pred[static_cast<std::size_t>(c.g)] >= 0)
      continue;
    a.pred_to_gt[static_cast<std::size_t>(c.p)] = c.g;
    a.gt_to_pred[static_cast<std::size_t>(c.g)] = c.p;
    a.cost += c.dist;
  }
  return a;
}

struct Detection {
  Cell center;
  double confidence = 0.0;
  MeshParams params;
  int depth_rank = 0;  // 0 is the front-most person
};

/// True when `a` should be drawn in front of `b`: the larger scale wins
/// unless the scales are within `similar` (relative), then the higher
/// center confidence wins.
inline bool in_front_of(const Detection& a, const Detection& b, double similar) {
  const double sa = a.params.cam.s, sb = b.params.cam.s;
  if (std::abs(sa - sb) > similar * std::max(std::abs(sa), std::abs(sb))) return sa > sb;
  return a.confidence > b.confidence;
}

/// Indices of `dets` from front to back. The pairwise rule is not
/// transitive, so ranking is an insertion pass in input order: each
/// detection goes before the first ranked one it is in front of.
inline std::vector<int> depth_order(std::span<const Detection> dets,
                                    double similar = kDefaultSimilarScale) {
  std::vector<int> ranked;
  ranked.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    auto pos = std::find_if(ranked.begin(), ranked.end(), [&](int j) {
      return in_front_of(dets[i], dets[static_cast<std::size_t>(j)], similar);
    });
    ranked.insert(pos, static_cast<int>(i));
  }
  return ranked;
}

struct DecodeOptions {
  double threshold = kDefaultCenterThreshold;
  int max_people = kDefaultMaxPeople;
  double similar_scale = kDefaultSimilarScale;
};

/// Peak parsing, parameter sampling and depth ranking. Output is ordered
/// by confidence, strongest first.
inline std::vector<Detection> decode_maps(const CenterHeatmap& cm, const MeshParamMap& pm,
                                          const DecodeOptions& opts = {}) {
  if (cm.height() != pm.height() || cm.width() != pm.width())
    fail(ErrorCode::Shape, "heatmap and mesh parameter map sizes disagree");
  const auto peaks = parse_peaks(cm, opts.threshold, opts.max_people);
  std::vector<Detection> dets;
  dets.reserve(peaks.size());
  for (const auto& p : peaks) dets.push_back({p.cell, p.confidence, sample_params(pm, p.cell), 0});
  const auto order = depth_order(dets, opts.similar_scale);
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    dets[static_cast<std::size_t>(order[rank])].depth_rank = static_cast<int>(rank);
  return dets;
}

struct DecodedPerson {
  Detection detection;
  Points3 vertices;
  Points3 joints;
  Points2 joints2d;  // normalized image coordinates
};

/// Full inference path: decode_maps followed by the body model and the
/// weak-perspective projection for each detection.
inline std::vector<DecodedPerson> decode_scene(const CenterHeatmap& cm, const MeshParamMap& pm,
                                               const BodyModel& body,
                                               const DecodeOptions& opts = {}) {
  std::vector<DecodedPerson> out;
  for (auto& det : decode_maps(cm, pm, opts)) {
    BodyOutput mesh = body.forward(det.params.pose, det.params.shape);
    Points2 j2d = project(mesh.joints, det.params.cam);
    out.push_back({std::move(det), std::move(mesh.vertices), std::move(mesh.joints), std::move(j2d)});
  }
  return out;
}

}  // namespace meshmap
