#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "meshmap/decode.hpp"
#include "meshmap/error.hpp"
#include "meshmap/scene.hpp"

namespace meshmap {

using Json = nlohmann::json;

namespace detail {

inline Json points_to_json(const Points2& pts) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) a.push_back({pts(i, 0), pts(i, 1)});
  return a;
}

inline Points2 points_from_json(const Json& a) {
  Points2 pts(static_cast<Eigen::Index>(a.size()), 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_array() || a[i].size() != 2) fail(ErrorCode::Parse, "joints2d entries must be [x, y]");
    pts(static_cast<Eigen::Index>(i), 0) = a[i][0].get<double>();
    pts(static_cast<Eigen::Index>(i), 1) = a[i][1].get<double>();
  }
  return pts;
}

inline Json pose_to_json(const PoseParams& pose) {
  Json a = Json::array();
  for (const auto& r : pose.rot6d) a.push_back(r);
  return a;
}

inline PoseParams pose_from_json(const Json& a) {
  PoseParams p;
  p.rot6d.clear();
  for (const auto& r : a) {
    if (!r.is_array() || r.size() != 6) fail(ErrorCode::Parse, "pose6d entries must have 6 numbers");
    p.rot6d.push_back(r.get<Rot6d>());
  }
  return p;
}

inline Json cam_to_json(const CameraParams& c) { return {c.s, c.tx, c.ty}; }

inline CameraParams cam_from_json(const Json& a) {
  if (!a.is_array() || a.size() != 3) fail(ErrorCode::Parse, "cam must be [s, tx, ty]");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline ShapeParams shape_from_json(const Json& a) {
  if (!a.is_array() || a.size() != kShapeDims) fail(ErrorCode::Parse, "shape must have 10 numbers");
  ShapeParams s;
  s.beta = a.get<std::array<double, kShapeDims>>();
  return s;
}

inline Json params_fields(const MeshParams& p) {
  return {{"cam", cam_to_json(p.cam)}, {"pose6d", pose_to_json(p.pose)}, {"shape", p.shape.beta}};
}

inline MeshParams params_from_fields(const Json& j) {
  MeshParams p;
  p.cam = cam_from_json(j.at("cam"));
  p.pose = pose_from_json(j.at("pose6d"));
  p.shape = shape_from_json(j.at("shape"));
  return p;
}

template <class F>
auto parse_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorCode::Parse, e.what());
  }
}

}  // namespace detail

inline Json scene_to_json(const Scene& scene) {
  Json people = Json::array();
  for (const auto& p : scene.people) {
    Json j = detail::params_fields(p.params);
    j["joints2d"] = detail::points_to_json(p.joints2d.positions);
    j["visible"] = p.joints2d.visible;
    j["bbox_diag"] = p.bbox_diag;
    j["center"] = {p.center.x(), p.center.y()};
    people.push_back(std::move(j));
  }
  return {{"image_size", {scene.image_size, scene.image_size}},
          {"map_size", {scene.map_size, scene.map_size}},
          {"car_gamma", scene.car_gamma},
          {"people", std::move(people)}};
}

/// joints2d, visible, bbox_diag and center are optional per person; missing
/// values are re-derived when the scene is encoded.
inline Scene scene_from_json(const Json& j) {
  return detail::parse_guard([&] {
    Scene s;
    auto square = [](const Json& v, const char* what) {
      if (v.is_number_integer()) return v.get<int>();
      if (!v.is_array() || v.size() != 2 || v[0] != v[1])
        fail(ErrorCode::Parse, std::string(what) + " must be square");
      return v[0].get<int>();
    };
    if (j.contains("image_size")) s.image_size = square(j["image_size"], "image_size");
    if (j.contains("map_size")) s.map_size = square(j["map_size"], "map_size");
    s.car_gamma = j.value("car_gamma", 0.0);
    for (const auto& pj : j.at("people")) {
      Person p;
      p.params = detail::params_from_fields(pj);
      if (pj.contains("joints2d")) {
        p.joints2d.positions = detail::points_from_json(pj["joints2d"]);
        p.joints2d.visible = pj.contains("visible")
                                 ? pj["visible"].get<std::vector<bool>>()
                                 : std::vector<bool>(static_cast<std::size_t>(p.joints2d.size()), true);
        if (p.joints2d.visible.size() != static_cast<std::size_t>(p.joints2d.size()))
          fail(ErrorCode::Parse, "visible length does not match joints2d");
        p.center = pj.contains("center")
                       ? Vec2(pj["center"].at(0).get<double>(), pj["center"].at(1).get<double>())
                       : compute_body_center(p.joints2d);
      }
      p.bbox_diag = pj.value("bbox_diag", 0.0);
      s.people.push_back(std::move(p));
    }
    s.validate();
    return s;
  });
}

/// Detections as `{people: [{center: [row, col], conf, cam, pose6d, shape,
/// depth_rank}]}`. With a body model each entry also gets its projected 2D
/// joints in heatmap px.
inline Json detections_to_json(std::span<const Detection> dets, const BodyModel* body = nullptr,
                               int map_size = kDefaultMapSize) {
  Json people = Json::array();
  for (const auto& d : dets) {
    Json j = detail::params_fields(d.params);
    j["center"] = {d.center.row, d.center.col};
    j["conf"] = d.confidence;
    j["depth_rank"] = d.depth_rank;
    if (body) {
      const BodyOutput out = body->forward(d.params.pose, d.params.shape);
      j["joints2d"] = detail::points_to_json(
          normalized_to_heatmap(project(out.joints, d.params.cam), map_size, map_size));
    }
    people.push_back(std::move(j));
  }
  return {{"people", std::move(people)}};
}

inline std::vector<Detection> detections_from_json(const Json& j) {
  return detail::parse_guard([&] {
    std::vector<Detection> out;
    for (const auto& pj : j.at("people")) {
      Detection d;
      d.params = detail::params_from_fields(pj);
      const Json& c = pj.at("center");
      d.center = {c.at(0).get<int>(), c.at(1).get<int>()};
      d.confidence = pj.value("conf", 1.0);
      d.depth_rank = pj.value("depth_rank", 0);
      out.push_back(std::move(d));
    }
    return out;
  });
}

inline Json eval_to_json(const EvalResult& r) {
  return {{"mpjpe_mm", r.mpjpe}, {"pmpjpe_mm", r.pmpjpe}, {"pve_mm", r.pve},
          {"pck", r.pck},        {"auc", r.auc},         {"mpjae_deg", r.mpjae},
          {"pa_mpjae_deg", r.pa_mpjae}, {"ap50", r.ap50}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Load, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::Parse, path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Load, "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace meshmap
