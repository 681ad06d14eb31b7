#pragma once

#include "poselift/nn/tensor.hpp"

#include <span>
#include <vector>

namespace poselift {

// K joints stored as one flat coordinate vector (x0, y0[, z0], x1, ...).
template <int Dim, typename Scalar = double>
class BasicPose {
 public:
  static constexpr int kDim = Dim;
  using Coords = VectorX<Scalar>;

  BasicPose() = default;
  explicit BasicPose(Coords coords) : coords_(std::move(coords)) {
    if (coords_.size() % Dim != 0)
      throw DimensionError("pose: " + std::to_string(coords_.size()) + " values is not a multiple of " +
                           std::to_string(Dim));
  }

  static BasicPose zeros(int joints) { return BasicPose(Coords::Zero(Dim * joints)); }

  int joints() const { return static_cast<int>(coords_.size() / Dim); }

  auto joint(int k) { return coords_.template segment<Dim>(Dim * k); }
  auto joint(int k) const { return coords_.template segment<Dim>(Dim * k); }

  const Coords& coords() const { return coords_; }
  Coords& coords() { return coords_; }

  bool all_finite() const { return coords_.allFinite(); }

  friend bool operator==(const BasicPose& a, const BasicPose& b) {
    return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
  }

 private:
  Coords coords_;
};

using Pose2D = BasicPose<2>;
using Pose3D = BasicPose<3>;

// Stack poses as columns of a (Dim*K) x T matrix.
template <int Dim, typename Scalar>
MatrixX<Scalar> stack_columns(std::span<const BasicPose<Dim, Scalar>> poses) {
  if (poses.empty()) return {};
  MatrixX<Scalar> m(poses.front().coords().size(), static_cast<Eigen::Index>(poses.size()));
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (poses[i].coords().size() != m.rows()) throw DimensionError("stack_columns: ragged poses");
    m.col(static_cast<Eigen::Index>(i)) = poses[i].coords();
  }
  return m;
}

template <int Dim, typename Scalar>
MatrixX<Scalar> stack_columns(const std::vector<BasicPose<Dim, Scalar>>& poses) {
  return stack_columns(std::span<const BasicPose<Dim, Scalar>>(poses));
}

}  // namespace poselift
