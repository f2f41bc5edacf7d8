#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshmap/error.hpp"
#include "meshmap/rotation.hpp"
#include "meshmap/tensor_io.hpp"

namespace meshmap {

using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

inline constexpr int kShapeDims = 10;
inline constexpr int kPosedJoints = 22;

// Joint order (SMPL body order with the two hand joints dropped):
//   0 pelvis  1 l_hip  2 r_hip  3 spine1  4 l_knee  5 r_knee  6 spine2
//   7 l_ankle 8 r_ankle 9 spine3 10 l_foot 11 r_foot 12 neck 13 l_collar
//  14 r_collar 15 head 16 l_shoulder 17 r_shoulder 18 l_elbow 19 r_elbow
//  20 l_wrist 21 r_wrist
namespace joint {
inline constexpr int kPelvis = 0;
inline constexpr int kLeftHip = 1;
inline constexpr int kRightHip = 2;
inline constexpr int kNeck = 12;
inline constexpr int kLeftShoulder = 16;
inline constexpr int kRightShoulder = 17;
}  // namespace joint

inline constexpr std::array<int, 6> kTorsoJoints = {
    joint::kNeck, joint::kLeftShoulder, joint::kRightShoulder,
    joint::kPelvis, joint::kLeftHip, joint::kRightHip};

inline constexpr std::array<int, 24> kSmplParents = {
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

/// Per-joint 6D rotations; entry 0 is the global orientation, the rest are
/// relative to the parent joint.
struct PoseParams {
  std::vector<Rot6d> rot6d;

  static PoseParams identity(int joints = kPosedJoints) {
    return PoseParams{std::vector<Rot6d>(static_cast<std::size_t>(joints), kIdentity6d)};
  }
  int joint_count() const { return static_cast<int>(rot6d.size()); }
  std::vector<double> flat() const {
    std::vector<double> out;
    out.reserve(rot6d.size() * 6);
    for (const auto& r : rot6d) out.insert(out.end(), r.begin(), r.end());
    return out;
  }
  static PoseParams from_flat(std::span<const double> v) {
    if (v.size() % 6 != 0) fail(ErrorCode::Shape, "flat pose length is not a multiple of 6");
    PoseParams p;
    p.rot6d.resize(v.size() / 6);
    for (std::size_t j = 0; j < p.rot6d.size(); ++j)
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(6 * j), 6, p.rot6d[j].begin());
    return p;
  }
  friend bool operator==(const PoseParams&, const PoseParams&) = default;
};

struct ShapeParams {
  std::array<double, kShapeDims> beta{};
  friend bool operator==(const ShapeParams&, const ShapeParams&) = default;
};

struct BodyOutput {
  Points3 vertices;
  Points3 joints;
};

/// Template mesh, shape blendshapes, joint regressor, kinematic tree and
/// skinning weights. Immutable once constructed; the constructor enforces
/// the invariants (convex skin rows, unit-sum regressor rows, single rooted
/// tree).
class BodyModel {
 public:
  BodyModel(Points3 template_vertices, Eigen::MatrixXd shape_dirs,
            Eigen::MatrixXd joint_regressor, std::vector<int> parents,
            Eigen::MatrixXd skin_weights)
      : template_(std::move(template_vertices)),
        shape_dirs_(std::move(shape_dirs)),
        regressor_(std::move(joint_regressor)),
        parents_(std::move(parents)),
        skin_(std::move(skin_weights)) {
    validate();
  }

  int vertex_count() const { return static_cast<int>(template_.rows()); }
  int joint_count() const { return static_cast<int>(parents_.size()); }

  const Points3& template_vertices() const { return template_; }
  /// (3V) x 10; row 3*v + d holds the basis for vertex v, coordinate d.
  const Eigen::MatrixXd& shape_dirs() const { return shape_dirs_; }
  const Eigen::MatrixXd& joint_regressor() const { return regressor_; }
  const std::vector<int>& parents() const { return parents_; }
  const Eigen::MatrixXd& skin_weights() const { return skin_; }
  /// Joints ordered so every parent precedes its children.
  const std::vector<int>& topological_order() const { return order_; }

  Points3 shaped_vertices(const ShapeParams& shape) const {
    Eigen::Map<const Eigen::Matrix<double, kShapeDims, 1>> beta(shape.beta.data());
    const Eigen::VectorXd offsets = shape_dirs_ * beta;
    Points3 v = template_;
    for (int i = 0; i < vertex_count(); ++i)
      for (int d = 0; d < 3; ++d) v(i, d) += offsets(3 * i + d);
    return v;
  }

  Points3 regress_joints(const Points3& vertices) const { return regressor_ * vertices; }

  /// World rotations of every joint for the given local rotations.
  std::vector<Mat3> global_rotations(const std::vector<Mat3>& local) const {
    check_pose_count(static_cast<int>(local.size()));
    std::vector<Mat3> world(local.size());
    for (int j : order_) {
      const int p = parents_[static_cast<std::size_t>(j)];
      world[j] = p < 0 ? local[j] : Mat3(world[p] * local[j]);
    }
    return world;
  }

  BodyOutput forward(const PoseParams& pose, const ShapeParams& shape) const {
    check_pose_count(pose.joint_count());
    std::vector<Mat3> local(pose.rot6d.size());
    for (std::size_t j = 0; j < local.size(); ++j) local[j] = rot6d_to_matrix(pose.rot6d[j]);
    return forward(local, shape);
  }

  BodyOutput forward(const std::vector<Mat3>& local, const ShapeParams& shape) const {
    check_pose_count(static_cast<int>(local.size()));
    for (const auto& r : shape.beta)
      if (!std::isfinite(r)) fail(ErrorCode::InvalidArgument, "non-finite shape parameter");

    const Points3 rest = shaped_vertices(shape);
    const Points3 rest_joints = regress_joints(rest);
    const int K = joint_count();

    std::vector<Mat3> world_R(static_cast<std::size_t>(K));
    std::vector<Vec3> world_t(static_cast<std::size_t>(K));
    for (int j : order_) {
      const int p = parents_[static_cast<std::size_t>(j)];
      const Vec3 jr = rest_joints.row(j).transpose();
      if (p < 0) {
        world_R[j] = local[j];
        world_t[j] = jr;
      } else {
        const Vec3 offset = jr - rest_joints.row(p).transpose();
        world_R[j] = world_R[p] * local[j];
        world_t[j] = world_R[p] * offset + world_t[p];
      }
    }
    // Skinning transform: x -> R_j (x - J_j) + t_j, stored as 3x4 rows.
    Eigen::Matrix<double, Eigen::Dynamic, 12, Eigen::RowMajor> A(K, 12);
    for (int j = 0; j < K; ++j) {
      const Vec3 t = world_t[j] - world_R[j] * rest_joints.row(j).transpose();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) A(j, 4 * r + c) = world_R[j](r, c);
        A(j, 4 * r + 3) = t(r);
      }
    }
    const Eigen::Matrix<double, Eigen::Dynamic, 12, Eigen::RowMajor> blended = skin_ * A;

    BodyOutput out;
    out.vertices.resize(vertex_count(), 3);
    for (int i = 0; i < vertex_count(); ++i) {
      const double x = rest(i, 0), y = rest(i, 1), z = rest(i, 2);
      for (int r = 0; r < 3; ++r)
        out.vertices(i, r) = blended(i, 4 * r) * x + blended(i, 4 * r + 1) * y +
                             blended(i, 4 * r + 2) * z + blended(i, 4 * r + 3);
    }
    out.joints = regress_joints(out.vertices);
    return out;
  }

  friend bool operator==(const BodyModel& a, const BodyModel& b) {
    return a.template_ == b.template_ && a.shape_dirs_ == b.shape_dirs_ &&
           a.regressor_ == b.regressor_ && a.parents_ == b.parents_ && a.skin_ == b.skin_;
  }

 private:
  void check_pose_count(int n) const {
    if (n != joint_count())
      fail(ErrorCode::Shape, "pose has " + std::to_string(n) + " rotations, model has " +
                                 std::to_string(joint_count()) + " joints");
  }

  void validate() {
    const auto V = template_.rows();
    const auto K = static_cast<Eigen::Index>(parents_.size());
    if (V == 0 || K == 0) fail(ErrorCode::Shape, "empty body model");
    if (shape_dirs_.rows() != 3 * V || shape_dirs_.cols() != kShapeDims)
      fail(ErrorCode::Shape, "shape_dirs must be V x 3 x 10");
    if (regressor_.rows() != K || regressor_.cols() != V)
      fail(ErrorCode::Shape, "joint_regressor must be K x V");
    if (skin_.rows() != V || skin_.cols() != K)
      fail(ErrorCode::Shape, "skin_weights must be V x K");
    if (!template_.allFinite() || !shape_dirs_.allFinite() || !regressor_.allFinite() ||
        !skin_.allFinite())
      fail(ErrorCode::Load, "body model contains non-finite values");

    for (Eigen::Index i = 0; i < V; ++i) {
      if (skin_.row(i).minCoeff() < 0.0)
        fail(ErrorCode::Load, "skin weights of vertex " + std::to_string(i) + " are negative");
      if (std::abs(skin_.row(i).sum() - 1.0) > 1e-6)
        fail(ErrorCode::Load, "skin weights of vertex " + std::to_string(i) + " are not normalized");
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      if (regressor_.row(k).minCoeff() < 0.0)
        fail(ErrorCode::Load, "joint regressor row " + std::to_string(k) + " is negative");
      if (std::abs(regressor_.row(k).sum() - 1.0) > 1e-6)
        fail(ErrorCode::Load, "joint regressor row " + std::to_string(k) + " is not normalized");
    }

    if (parents_[0] != -1) fail(ErrorCode::Load, "joint 0 must be the root");
    std::vector<std::vector<int>> children(static_cast<std::size_t>(K));
    for (Eigen::Index j = 1; j < K; ++j) {
      const int p = parents_[static_cast<std::size_t>(j)];
      if (p < 0 || p >= K || p == j)
        fail(ErrorCode::Load, "joint " + std::to_string(j) + " has an invalid parent");
      children[static_cast<std::size_t>(p)].push_back(static_cast<int>(j));
    }
    order_.clear();
    order_.push_back(0);
    for (std::size_t head = 0; head < order_.size(); ++head)
      for (int c : children[static_cast<std::size_t>(order_[head])]) order_.push_back(c);
    if (static_cast<Eigen::Index>(order_.size()) != K)
      fail(ErrorCode::Load, "kinematic tree has a cycle or is disconnected");
  }

  Points3 template_;
  Eigen::MatrixXd shape_dirs_;
  Eigen::MatrixXd regressor_;
  std::vector<int> parents_;
  Eigen::MatrixXd skin_;
  std::vector<int> order_;
};

namespace detail {

// Uniform double in [0, 1) from the raw engine output; the standard
// distributions are not portable across library implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

// The volatile store stops GCC 11 at -O3 from folding the narrowing away.
inline double to_f32(double v) {
  volatile float f = static_cast<float>(v);
  return static_cast<double>(f);
}

// Rest positions (meters, y pointing down, arms out) of the humanoid layout.
inline Vec3 humanoid_joint(int j) {
  static const std::array<std::array<double, 3>, 24> kRest = {{
      {0.00, 0.00, 0.00},   {0.09, 0.08, 0.00},   {-0.09, 0.08, 0.00},
      {0.00, -0.11, 0.00},  {0.10, 0.46, 0.00},   {-0.10, 0.46, 0.00},
      {0.00, -0.24, 0.00},  {0.10, 0.86, 0.00},   {-0.10, 0.86, 0.00},
      {0.00, -0.30, 0.00},  {0.11, 0.92, 0.10},   {-0.11, 0.92, 0.10},
      {0.00, -0.52, 0.00},  {0.07, -0.44, 0.00},  {-0.07, -0.44, 0.00},
      {0.00, -0.66, 0.00},  {0.18, -0.46, 0.00},  {-0.18, -0.46, 0.00},
      {0.44, -0.46, 0.00},  {-0.44, -0.46, 0.00}, {0.68, -0.46, 0.00},
      {-0.68, -0.46, 0.00}, {0.76, -0.46, 0.00},  {-0.76, -0.46, 0.00},
  }};
  if (j < 24) return Vec3(kRest[j][0], kRest[j][1], kRest[j][2]);
  return humanoid_joint(j - 1) + Vec3(0.0, -0.05, 0.0);
}

}  // namespace detail

inline int toy_parent(int j) {
  if (j == 0) return -1;
  return j < static_cast<int>(kSmplParents.size()) ? kSmplParents[static_cast<std::size_t>(j)]
                                                    : j - 1;
}

/// Deterministic synthetic body model with a humanoid joint layout. All
/// stored values are float-representable so the model survives an RMTF
/// round trip bit-exactly.
inline BodyModel make_toy_model(int v_count, int k_count, std::uint64_t seed) {
  if (k_count < 2) fail(ErrorCode::InvalidArgument, "toy model needs at least 2 joints");
  if (v_count < 4 * k_count)
    fail(ErrorCode::InvalidArgument, "toy model needs at least 4 vertices per joint");

  std::mt19937_64 rng(seed);
  std::vector<int> parents(static_cast<std::size_t>(k_count));
  for (int j = 0; j < k_count; ++j) parents[static_cast<std::size_t>(j)] = toy_parent(j);

  Points3 tmpl(v_count, 3);
  Eigen::MatrixXd skin = Eigen::MatrixXd::Zero(v_count, k_count);
  std::vector<std::vector<int>> owned(static_cast<std::size_t>(k_count));

  for (int i = 0; i < v_count; ++i) {
    const int j = i % k_count;
    owned[static_cast<std::size_t>(j)].push_back(i);
    const int p = parents[static_cast<std::size_t>(j)];
    const Vec3 head = detail::humanoid_joint(j);
    const Vec3 tail = p < 0 ? head : detail::humanoid_joint(p);
    const double along = detail::uniform(rng, 0.0, 0.6);
    const Vec3 jitter(detail::uniform(rng, -0.04, 0.04), detail::uniform(rng, -0.04, 0.04),
                      detail::uniform(rng, -0.04, 0.04));
    const Vec3 pos = head + along * (tail - head) + jitter;
    for (int d = 0; d < 3; ++d) tmpl(i, d) = detail::to_f32(pos(d));

    if (p < 0) {
      skin(i, j) = 1.0;
    } else {
      const double own = detail::to_f32(detail::uniform(rng, 0.55, 1.0));
      skin(i, j) = own;
      skin(i, p) += detail::to_f32(1.0 - own);
    }
  }

  Eigen::MatrixXd regressor = Eigen::MatrixXd::Zero(k_count, v_count);
  for (int j = 0; j < k_count; ++j) {
    const auto& verts = owned[static_cast<std::size_t>(j)];
    // Row sum is 1 up to float rounding of 1/n.
    const double w = detail::to_f32(1.0 / static_cast<double>(verts.size()));
    for (int v : verts) regressor(j, v) = w;
  }

  Eigen::MatrixXd shape_dirs(3 * v_count, kShapeDims);
  for (int i = 0; i < v_count; ++i) {
    for (int d = 0; d < 3; ++d) {
      // Direction 0 scales the body about the pelvis, the rest are random.
      shape_dirs(3 * i + d, 0) = detail::to_f32(0.03 * tmpl(i, d));
      for (int b = 1; b < kShapeDims; ++b)
        shape_dirs(3 * i + d, b) = detail::to_f32(detail::uniform(rng, -0.01, 0.01));
    }
  }
  return BodyModel(std::move(tmpl), std::move(shape_dirs), std::move(regressor),
                   std::move(parents), std::move(skin));
}

inline TensorFile model_to_tensors(const BodyModel& m) {
  const auto V = static_cast<std::uint32_t>(m.vertex_count());
  const auto K = static_cast<std::uint32_t>(m.joint_count());
  auto flat = [](const auto& mat) {
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(mat.size()));
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
      for (Eigen::Index c = 0; c < mat.cols(); ++c) out.push_back(static_cast<float>(mat(r, c)));
    return out;
  };
  TensorFile f;
  f.add("template", Tensor({V, 3}, flat(m.template_vertices())));
  f.add("shape_dirs", Tensor({V, 3, kShapeDims}, flat(m.shape_dirs())));
  f.add("joint_regressor", Tensor({K, V}, flat(m.joint_regressor())));
  std::vector<float> parents;
  for (int p : m.parents()) parents.push_back(static_cast<float>(p));
  f.add("parents", Tensor({K}, std::move(parents)));
  f.add("skin_weights", Tensor({V, K}, flat(m.skin_weights())));
  return f;
}

inline BodyModel model_from_tensors(const TensorFile& f) {
  const Tensor& tmpl = f.at("template");
  if (tmpl.rank() != 2 || tmpl.dims[1] != 3) fail(ErrorCode::Load, "template must be V x 3");
  const auto V = static_cast<Eigen::Index>(tmpl.dims[0]);

  const Tensor& parents_t = f.at("parents");
  if (parents_t.rank() != 1) fail(ErrorCode::Load, "parents must be a vector");
  const auto K = static_cast<Eigen::Index>(parents_t.dims[0]);

  auto expect = [](const Tensor& t, std::vector<std::uint32_t> dims, const char* name) {
    if (t.dims != dims) fail(ErrorCode::Load, std::string(name) + " has wrong dims");
  };
  const auto v32 = static_cast<std::uint32_t>(V);
  const auto k32 = static_cast<std::uint32_t>(K);
  const Tensor& dirs = f.at("shape_dirs");
  expect(dirs, {v32, 3, kShapeDims}, "shape_dirs");
  const Tensor& reg = f.at("joint_regressor");
  expect(reg, {k32, v32}, "joint_regressor");
  const Tensor& skin = f.at("skin_weights");
  expect(skin, {v32, k32}, "skin_weights");

  auto to_matrix = [](const Tensor& t, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        m(r, c) = static_cast<double>(t.data[static_cast<std::size_t>(r * cols + c)]);
    return m;
  };
  Points3 tv = to_matrix(tmpl, V, 3);
  std::vector<int> parents;
  for (float p : parents_t.data) {
    if (p != std::floor(p)) fail(ErrorCode::Load, "parents must hold integer indices");
    parents.push_back(static_cast<int>(p));
  }
  return BodyModel(std::move(tv), to_matrix(dirs, 3 * V, kShapeDims), to_matrix(reg, K, V),
                   std::move(parents), to_matrix(skin, V, K));
}

inline void save_model(const std::string& path, const BodyModel& m) {
  save_rmtf(path, model_to_tensors(m));
}

inline BodyModel load_model(const std::string& path) {
  return model_from_tensors(load_rmtf(path));
}

}  // namespace meshmap
