#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "meshmap/body_model.hpp"
#include "meshmap/camera.hpp"
#include "meshmap/error.hpp"
#include "meshmap/tensor_io.hpp"

namespace meshmap {

inline constexpr int kCameraChannels = 3;
inline constexpr int kPoseChannels = 6 * kPosedJoints;
inline constexpr int kMeshParamChannels = kCameraChannels + kPoseChannels + kShapeDims;
static_assert(kMeshParamChannels == 145);

inline constexpr int kDefaultMapSize = 64;

/// Cell index on a map grid.
struct Cell {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Single-channel body-center heatmap, row-major H x W.
class CenterHeatmap {
 public:
  CenterHeatmap(int height = kDefaultMapSize, int width = kDefaultMapSize)
      : height_(height), width_(width),
        values_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0.0) {
    if (height <= 0 || width <= 0) fail(ErrorCode::Shape, "heatmap dims must be positive");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  bool contains(Cell c) const { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }

  double& at(int r, int c) { return values_[index(r, c)]; }
  double at(int r, int c) const { return values_[index(r, c)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Tensor to_tensor() const {
    std::vector<float> data(values_.begin(), values_.end());
    return Tensor({1, static_cast<std::uint32_t>(height_), static_cast<std::uint32_t>(width_)},
                  std::move(data));
  }

  static CenterHeatmap from_tensor(const Tensor& t) {
    if (t.rank() != 3 || t.dims[0] != 1)
      fail(ErrorCode::Load, "center_heatmap must be 1 x H x W");
    CenterHeatmap m(static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]));
    std::copy(t.data.begin(), t.data.end(), m.values_.begin());
    return m;
  }

  friend bool operator==(const CenterHeatmap&, const CenterHeatmap&) = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c);
  }

  int height_;
  int width_;
  std::vector<double> values_;
};

/// Per-cell parameter vector: camera (s, tx, ty), 22 6D rotations, 10 shape
/// coefficients.
struct MeshParams {
  CameraParams cam;
  PoseParams pose = PoseParams::identity();
  ShapeParams shape;

  std::array<double, kMeshParamChannels> to_vector() const {
    if (pose.joint_count() != kPosedJoints)
      fail(ErrorCode::Shape, "mesh parameter vectors carry exactly 22 rotations");
    std::array<double, kMeshParamChannels> v{};
    v[0] = cam.s;
    v[1] = cam.tx;
    v[2] = cam.ty;
    std::size_t k = kCameraChannels;
    for (const auto& r : pose.rot6d)
      for (double x : r) v[k++] = x;
    for (double b : shape.beta) v[k++] = b;
    return v;
  }

  static MeshParams from_vector(std::span<const double, kMeshParamChannels> v) {
    MeshParams p;
    p.cam = {v[0], v[1], v[2]};
    std::size_t k = kCameraChannels;
    for (auto& r : p.pose.rot6d)
      for (double& x : r) x = v[k++];
    for (double& b : p.shape.beta) b = v[k++];
    return p;
  }

  friend bool operator==(const MeshParams&, const MeshParams&) = default;
};

/// 145-channel mesh parameter map. Stored channels-last so the parameter
/// vector of one cell is contiguous; serialized channels-first.
class MeshParamMap {
 public:
  MeshParamMap(int height = kDefaultMapSize, int width = kDefaultMapSize)
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                  kMeshParamChannels,
              0.0) {
    if (height <= 0 || width <= 0) fail(ErrorCode::Shape, "map dims must be positive");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return kMeshParamChannels; }
  bool contains(Cell c) const { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }

  double& at(int ch, int r, int c) { return data_[offset(r, c) + static_cast<std::size_t>(ch)]; }
  double at(int ch, int r, int c) const { return data_[offset(r, c) + static_cast<std::size_t>(ch)]; }

  std::span<double, kMeshParamChannels> cell(int r, int c) {
    return std::span<double, kMeshParamChannels>(data_.data() + offset(r, c), kMeshParamChannels);
  }
  std::span<const double, kMeshParamChannels> cell(int r, int c) const {
    return std::span<const double, kMeshParamChannels>(data_.data() + offset(r, c),
                                                       kMeshParamChannels);
  }

  Tensor to_tensor() const {
    std::vector<float> out(data_.size());
    const std::size_t plane = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    for (int ch = 0; ch < kMeshParamChannels; ++ch)
      for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c)
          out[static_cast<std::size_t>(ch) * plane + static_cast<std::size_t>(r * width_ + c)] =
              static_cast<float>(at(ch, r, c));
    return Tensor({kMeshParamChannels, static_cast<std::uint32_t>(height_),
                   static_cast<std::uint32_t>(width_)},
                  std::move(out));
  }

  static MeshParamMap from_tensor(const Tensor& t) {
    if (t.rank() != 3 || t.dims[0] != kMeshParamChannels)
      fail(ErrorCode::Load, "mesh_params must be 145 x H x W");
    MeshParamMap m(static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]));
    const std::size_t plane = static_cast<std::size_t>(m.height_) * static_cast<std::size_t>(m.width_);
    for (int ch = 0; ch < kMeshParamChannels; ++ch)
      for (int r = 0; r < m.height_; ++r)
        for (int c = 0; c < m.width_; ++c) {
          const float v = t.data[static_cast<std::size_t>(ch) * plane +
                                 static_cast<std::size_t>(r * m.width_ + c)];
          if (!std::isfinite(v)) fail(ErrorCode::Load, "mesh_params contains non-finite values");
          m.at(ch, r, c) = v;
        }
    return m;
  }

  friend bool operator==(const MeshParamMap&, const MeshParamMap&) = default;

 private:
  std::size_t offset(int r, int c) const {
    return (static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(c)) *
           kMeshParamChannels;
  }

  int height_;
  int width_;
  std::vector<double> data_;
};

inline constexpr const char* kHeatmapEntry = "center_heatmap";
inline constexpr const char* kMeshParamEntry = "mesh_params";

struct SceneMaps {
  CenterHeatmap heatmap;
  MeshParamMap params;
};

inline TensorFile maps_to_tensors(const SceneMaps& maps) {
  TensorFile f;
  f.add(kHeatmapEntry, maps.heatmap.to_tensor());
  f.add(kMeshParamEntry, maps.params.to_tensor());
  return f;
}

inline SceneMaps maps_from_tensors(const TensorFile& f) {
  SceneMaps maps{CenterHeatmap::from_tensor(f.at(kHeatmapEntry)),
                 MeshParamMap::from_tensor(f.at(kMeshParamEntry))};
  if (maps.heatmap.height() != maps.params.height() || maps.heatmap.width() != maps.params.width())
    fail(ErrorCode::Shape, "heatmap and mesh parameter map sizes disagree");
  return maps;
}

}  // namespace meshmap
