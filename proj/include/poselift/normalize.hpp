#pragma once

#include "poselift/data/dataset.hpp"
#include "poselift/pose.hpp"

namespace poselift {

// Per-coordinate extremes over the training frames: 2D in pixels, 3D in mm.
struct NormStats {
  Vector min2d, max2d, min3d, max3d;

  bool operator==(const NormStats& o) const {
    return min2d == o.min2d && max2d == o.max2d && min3d == o.min3d && max3d == o.max3d;
  }
};

// Extremes over all frames (3D over frames that carry it). Throws if the
// dataset has no 3D frames.
NormStats compute_norm_stats(const SequenceDataset& train);

// (p - min) / (max - min) per coordinate. A coordinate with max == min maps
// to 0 and denormalizes back to min.
template <typename DerivedP, typename DerivedLo, typename DerivedHi>
Matrix normalize_columns(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedLo>& lo,
                         const Eigen::MatrixBase<DerivedHi>& hi) {
  if (p.rows() != lo.size() || p.rows() != hi.size())
    throw DimensionError("normalize: pose rows " + std::to_string(p.rows()) + " vs stats " +
                         std::to_string(lo.size()));
  Matrix out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double range = hi(i) - lo(i);
    for (Eigen::Index j = 0; j < p.cols(); ++j) out(i, j) = range > 0.0 ? (p(i, j) - lo(i)) / range : 0.0;
  }
  return out;
}

template <typename DerivedP, typename DerivedLo, typename DerivedHi>
Matrix denormalize_columns(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedLo>& lo,
                           const Eigen::MatrixBase<DerivedHi>& hi) {
  if (p.rows() != lo.size() || p.rows() != hi.size())
    throw DimensionError("denormalize: pose rows " + std::to_string(p.rows()) + " vs stats " +
                         std::to_string(lo.size()));
  Matrix out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double range = hi(i) - lo(i);
    for (Eigen::Index j = 0; j < p.cols(); ++j) out(i, j) = range > 0.0 ? lo(i) + p(i, j) * range : lo(i);
  }
  return out;
}

Pose2D normalize_pose(const Pose2D& p, const NormStats& s);
Pose3D normalize_pose(const Pose3D& p, const NormStats& s);
Pose2D denormalize_pose(const Pose2D& p, const NormStats& s);
Pose3D denormalize_pose(const Pose3D& p, const NormStats& s);

}  // namespace poselift
