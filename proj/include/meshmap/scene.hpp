#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "meshmap/body_model.hpp"
#include "meshmap/camera.hpp"
#include "meshmap/center_map.hpp"
#include "meshmap/decode.hpp"
#include "meshmap/error.hpp"
#include "meshmap/maps.hpp"
#include "meshmap/metrics.hpp"

namespace meshmap {

inline constexpr int kBackboneStride = 8;
inline constexpr int kDefaultImageSize = 512;

/// One subject: parameters plus the 2D evidence derived from them.
struct Person {
  MeshParams params;
  Joints2D joints2d;       // heatmap px
  double bbox_diag = 0.0;  // heatmap px
  Vec2 center = Vec2::Zero();
  double confidence = 1.0;
};

struct Scene {
  std::vector<Person> people;
  int image_size = kDefaultImageSize;
  int map_size = kDefaultMapSize;
  double car_gamma = 0.0;

  void validate() const {
    if (map_size <= 0 || image_size != map_size * kBackboneStride)
      fail(ErrorCode::InvalidArgument, "image size must be map size times the backbone stride (8)");
    if (!(car_gamma >= 0.0)) fail(ErrorCode::InvalidArgument, "car_gamma must be non-negative");
  }
};

/// Fills joints2d (all joints visible), bbox diagonal and center of a person
/// from its parameters.
inline Person derive_person(const MeshParams& params, const BodyModel& body, int map_size) {
  Person p;
  p.params = params;
  const BodyOutput out = body.forward(params.pose, params.shape);
  p.joints2d.positions = normalized_to_heatmap(project(out.joints, params.cam), map_size, map_size);
  p.joints2d.visible.assign(static_cast<std::size_t>(out.joints.rows()), true);
  p.bbox_diag = bbox_diagonal(p.joints2d);
  p.center = compute_body_center(p.joints2d);
  return p;
}

enum class Overlap { None, Moderate, Severe };

inline Overlap parse_overlap(const std::string& s) {
  if (s == "none") return Overlap::None;
  if (s == "moderate") return Overlap::Moderate;
  if (s == "severe") return Overlap::Severe;
  fail(ErrorCode::InvalidArgument, "overlap must be none, moderate or severe");
}

inline const char* to_string(Overlap o) {
  switch (o) {
    case Overlap::None: return "none";
    case Overlap::Moderate: return "moderate";
    case Overlap::Severe: return "severe";
  }
  return "none";
}

struct SynthOptions {
  int map_size = kDefaultMapSize;
  double min_scale = 0.28;
  double max_scale = 0.45;
  double max_joint_angle = 0.35;  // radians, non-root joints
  double occlusion_prob = 0.1;    // per non-torso joint
  int max_attempts = 4000;
};

namespace detail {

inline MeshParams random_params(std::mt19937_64& rng, const SynthOptions& o) {
  MeshParams p;
  p.cam.s = uniform(rng, o.min_scale, o.max_scale);
  for (double& b : p.shape.beta) b = uniform(rng, -1.5, 1.5);
  const Mat3 root = axis_angle_to_matrix(Vec3(0.0, uniform(rng, -0.8, 0.8), 0.0)) *
                    axis_angle_to_matrix(Vec3(uniform(rng, -0.1, 0.1), 0.0, uniform(rng, -0.1, 0.1)));
  p.pose.rot6d[0] = matrix_to_rot6d(root);
  for (int j = 1; j < kPosedJoints; ++j) {
    Vec3 axis(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    if (axis.norm() < 1e-3) axis = Vec3::UnitX();
    const double angle = uniform(rng, 0.0, o.max_joint_angle);
    p.pose.rot6d[static_cast<std::size_t>(j)] = matrix_to_rot6d(axis_angle_to_matrix(axis.normalized() * angle));
  }
  return p;
}

inline bool all_in_frame(const Points2& px, int map_size) {
  return (px.array() >= 0.0).all() && (px.array() <= map_size - 1).all();
}

/// Translates `p` (placed with t = 0) so its center lands on `target`.
inline bool place_person(Person& p, const Vec2& target, int map_size) {
  const Vec2 shift_px = target - p.center;
  const double scale = 2.0 / (map_size - 1);
  const double tx = p.params.cam.tx + shift_px.x() * scale;
  const double ty = p.params.cam.ty + shift_px.y() * scale;
  if (!(tx > -1.0 && tx < 1.0 && ty > -1.0 && ty < 1.0)) return false;
  Points2 moved = p.joints2d.positions;
  moved.col(0).array() += shift_px.x();
  moved.col(1).array() += shift_px.y();
  if (!all_in_frame(moved, map_size)) return false;
  p.params.cam.tx = tx;
  p.params.cam.ty = ty;
  p.joints2d.positions = moved;
  p.center = target;
  return true;
}

}  // namespace detail

inline double person_kernel(const Person& p, int map_size) {
  return kernel_size(p.bbox_diag, map_size);
}

/// Deterministic synthetic crowd.
///  - none: every pair is at least one pixel beyond the repulsion trigger
///    distance k1 + k2 + 1.
///  - moderate: pairs keep at least 0.6 of the trigger distance when the
///    sampler can manage it.
///  - severe: like moderate, but person 1 is placed inside the trigger
///    distance of person 0 (uniformly up to 0.6 of it).
inline Scene synth_scene(int n_people, std::uint64_t seed, Overlap overlap, const BodyModel& body,
                         const SynthOptions& opts = {}) {
  if (n_people < 0) fail(ErrorCode::InvalidArgument, "people count must be non-negative");
  if (body.joint_count() != kPosedJoints)
    fail(ErrorCode::Shape, "scene synthesis needs a 22-joint body model");
  Scene scene;
  scene.map_size = opts.map_size;
  scene.image_size = opts.map_size * kBackboneStride;
  const int W = opts.map_size;
  std::mt19937_64 rng(seed);

  for (int i = 0; i < n_people; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < opts.max_attempts && !placed; ++attempt) {
      Person p = derive_person(detail::random_params(rng, opts), body, W);
      for (int j = 0; j < p.joints2d.size(); ++j) {
        const bool torso = std::find(kTorsoJoints.begin(), kTorsoJoints.end(), j) != kTorsoJoints.end();
        if (!torso && detail::unit_uniform(rng) < opts.occlusion_prob)
          p.joints2d.visible[static_cast<std::size_t>(j)] = false;
      }
      p.bbox_diag = bbox_diagonal(p.joints2d);
      const double k = person_kernel(p, W);

      Vec2 target;
      if (overlap == Overlap::Severe && i == 1) {
        const double trigger = person_kernel(scene.people[0], W) + k + 1.0;
        const double dist = detail::uniform(rng, 0.0, 0.6 * trigger);
        const double dir = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
        target = scene.people[0].center + dist * Vec2(std::cos(dir), std::sin(dir));
      } else {
        target = Vec2(detail::uniform(rng, 0.0, W - 1), detail::uniform(rng, 0.0, W - 1));
      }
      if (!detail::place_person(p, target, W)) continue;

      const bool relaxed = overlap != Overlap::None && attempt > opts.max_attempts / 2;
      bool ok = true;
      for (std::size_t j = 0; j < scene.people.size() && ok; ++j) {
        if (overlap == Overlap::Severe && i == 1) break;
        const double trigger = person_kernel(scene.people[j], W) + k + 1.0;
        const double d = (scene.people[j].center - p.center).norm();
        if (overlap == Overlap::None) ok = d >= trigger + 1.0;
        else if (!relaxed) ok = d >= 0.6 * trigger;
      }
      if (!ok) continue;

      scene.people.push_back(std::move(p));
      placed = true;
    }
    if (!placed)
      fail(ErrorCode::InvalidArgument,
           "could not place person " + std::to_string(i) + " under the requested overlap");
  }
  return scene;
}

struct EncodedScene {
  SceneMaps maps;
  std::vector<Vec2> centers;  // after repulsion
  std::vector<double> kernels;
  CarResult car;
};

/// Ground-truth map construction. Centers come from the visible 2D joints,
/// are pushed apart when car_gamma > 0, and get Gaussian peaks sized from the
/// person's box. Every cell within a person's kernel radius of its center
/// carries that person's parameter vector; contested cells go to the
/// nearest center (lower index on exact ties). Other cells stay zero.
inline EncodedScene encode_scene(const Scene& scene, const BodyModel& body) {
  scene.validate();
  const int W = scene.map_size;
  std::vector<Person> people = scene.people;
  for (auto& p : people) {
    if (p.joints2d.size() == 0) {
      const double conf = p.confidence;
      p = derive_person(p.params, body, W);
      p.confidence = conf;
    }
    if (!(p.bbox_diag > 0.0)) p.bbox_diag = bbox_diagonal(p.joints2d);
  }

  EncodedScene enc{SceneMaps{CenterHeatmap(W, W), MeshParamMap(W, W)}, {}, {}, {}};
  std::vector<CenterSpec> specs;
  for (const auto& p : people) {
    Vec2 c;
    try {
      c = compute_body_center(p.joints2d);
    } catch (const Error& e) {
      fail(ErrorCode::NoCenter, std::string("cannot encode person: ") + e.what());
    }
    specs.push_back({c, kernel_size(p.bbox_diag, W)});
  }

  enc.car = apply_car(specs, scene.car_gamma, W, W);
  enc.centers = enc.car.centers;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    specs[i].center = enc.centers[i];
    enc.kernels.push_back(specs[i].kernel);
  }
  enc.maps.heatmap = render_heatmap(specs, W, W);

  std::vector<double> owner_dist(static_cast<std::size_t>(W * W), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto vec = people[i].params.to_vector();
    const Vec2& c = specs[i].center;
    const double k = specs[i].kernel;
    const int radius = static_cast<int>(std::ceil(k));
    const Cell cc = nearest_cell(c);
    for (int r = std::max(0, cc.row - radius); r <= std::min(W - 1, cc.row + radius); ++r) {
      for (int col = std::max(0, cc.col - radius); col <= std::min(W - 1, cc.col + radius); ++col) {
        const double d = (Vec2(col, r) - c).norm();
        auto& best = owner_dist[static_cast<std::size_t>(r * W + col)];
        if (d > k || !(d < best)) continue;
        best = d;
        std::copy(vec.begin(), vec.end(), enc.maps.params.cell(r, col).begin());
      }
    }
  }
  return enc;
}

// ---------------------------------------------------------------------------
// Scene-level evaluation
// ---------------------------------------------------------------------------

struct EvalConfig {
  std::vector<double> pck_thresholds = default_pck_thresholds();
  std::vector<double> oks_sigmas;  // empty: kDefaultOksSigma for every joint
  double meters_to_mm = 1000.0;
};

struct PersonErrors {
  double mpjpe = 0.0, pmpjpe = 0.0, pve = 0.0, pck = 0.0, auc = 0.0, mpjae = 0.0, pa_mpjae = 0.0;
};

struct SceneEvaluation {
  std::vector<PersonErrors> matched;
  int n_gt = 0;
  int n_pred = 0;
  std::vector<Pose2D> pred2d;
  std::vector<Pose2D> gt2d;
  EvalResult summary;  // means over matched people; ap50 for this scene
};

namespace detail {

inline std::vector<Mat3> local_rotations(const PoseParams& pose) {
  std::vector<Mat3> out;
  out.reserve(pose.rot6d.size());
  for (const auto& r : pose.rot6d) out.push_back(rot6d_to_matrix(r));
  return out;
}

inline std::vector<double> sigmas_for(const EvalConfig& cfg, int joints) {
  if (cfg.oks_sigmas.empty()) return std::vector<double>(static_cast<std::size_t>(joints), kDefaultOksSigma);
  if (cfg.oks_sigmas.size() != static_cast<std::size_t>(joints))
    fail(ErrorCode::Shape, "OKS sigma count does not match joint count");
  return cfg.oks_sigmas;
}

inline EvalResult mean_errors(std::span<const PersonErrors> errs) {
  EvalResult r;
  if (errs.empty()) return r;
  for (const auto& e : errs) {
    r.mpjpe += e.mpjpe;
    r.pmpjpe += e.pmpjpe;
    r.pve += e.pve;
    r.pck += e.pck;
    r.auc += e.auc;
    r.mpjae += e.mpjae;
    r.pa_mpjae += e.pa_mpjae;
  }
  const double n = static_cast<double>(errs.size());
  r.mpjpe /= n;
  r.pmpjpe /= n;
  r.pve /= n;
  r.pck /= n;
  r.auc /= n;
  r.mpjae /= n;
  r.pa_mpjae /= n;
  return r;
}

}  // namespace detail

inline PersonErrors person_errors(const MeshParams& pred, const MeshParams& gt, const BodyModel& body,
                                  const EvalConfig& cfg) {
  const BodyOutput p = body.forward(pred.pose, pred.shape);
  const BodyOutput g = body.forward(gt.pose, gt.shape);
  const double mm = cfg.meters_to_mm;
  const Points3 pj = (p.joints.rowwise() - p.joints.row(joint::kPelvis)) * mm;
  const Points3 gj = (g.joints.rowwise() - g.joints.row(joint::kPelvis)) * mm;
  const Points3 pv = (p.vertices.rowwise() - p.joints.row(joint::kPelvis)) * mm;
  const Points3 gv = (g.vertices.rowwise() - g.joints.row(joint::kPelvis)) * mm;

  PersonErrors e;
  e.mpjpe = mpjpe(pj, gj);
  e.pmpjpe = pmpjpe(pj, gj);
  e.pve = pve(pv, gv);
  const auto pa = pck_auc(pj, gj, cfg.pck_thresholds);
  e.pck = pa.pck;
  e.auc = pa.auc;
  const auto pr = body.global_rotations(detail::local_rotations(pred.pose));
  const auto gr = body.global_rotations(detail::local_rotations(gt.pose));
  e.mpjae = mpjae(pr, gr);
  e.pa_mpjae = pa_mpjae(pr, gr);
  return e;
}

/// Matches detections to ground-truth people by center distance and scores
/// every matched pair. Unmatched people only affect AP.
inline SceneEvaluation evaluate_scene(std::span<const Detection> preds, const Scene& gt,
                                      const BodyModel& body, const EvalConfig& cfg = {}) {
  SceneEvaluation ev;
  ev.n_gt = static_cast<int>(gt.people.size());
  ev.n_pred = static_cast<int>(preds.size());
  const int W = gt.map_size;

  std::vector<Vec2> pc, gc;
  for (const auto& d : preds) pc.emplace_back(d.center.col, d.center.row);
  for (const auto& p : gt.people) gc.push_back(p.center);
  const Assignment match = match_to_gt(pc, gc);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int g = match.pred_to_gt[i];
    if (g >= 0) ev.matched.push_back(person_errors(preds[i].params, gt.people[static_cast<std::size_t>(g)].params, body, cfg));
  }

  for (const auto& d : preds) {
    const BodyOutput out = body.forward(d.params.pose, d.params.shape);
    Pose2D pose{normalized_to_heatmap(project(out.joints, d.params.cam), W, W),
                std::vector<bool>(static_cast<std::size_t>(out.joints.rows()), true), d.confidence};
    ev.pred2d.push_back(std::move(pose));
  }
  for (const auto& p : gt.people) ev.gt2d.push_back({p.joints2d.positions, p.joints2d.visible, 1.0});

  ev.summary = detail::mean_errors(ev.matched);
  const auto sigmas = detail::sigmas_for(cfg, body.joint_count());
  ev.summary.ap50 = ap50(ev.pred2d, ev.gt2d, sigmas);
  return ev;
}

/// Pooled result over several scenes: errors averaged over all matched
/// people, AP computed over all detections at once.
inline EvalResult aggregate(std::span<const SceneEvaluation> scenes, int joints,
                            const EvalConfig& cfg = {}) {
  std::vector<PersonErrors> all;
  std::vector<std::vector<Pose2D>> preds, gts;
  for (const auto& s : scenes) {
    all.insert(all.end(), s.matched.begin(), s.matched.end());
    preds.push_back(s.pred2d);
    gts.push_back(s.gt2d);
  }
  EvalResult r = detail::mean_errors(all);
  const auto sigmas = detail::sigmas_for(cfg, joints);
  r.ap50 = average_precision(preds, gts, sigmas, 0.5);
  return r;
}

}  // namespace meshmap
