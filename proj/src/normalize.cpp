#include "poselift/normalize.hpp"

namespace poselift {

NormStats compute_norm_stats(const SequenceDataset& train) {
  NormStats s;
  const Eigen::Index d2 = 2 * train.k, d3 = 3 * train.k;
  s.min2d = Vector::Constant(d2, std::numeric_limits<double>::infinity());
  s.max2d = Vector::Constant(d2, -std::numeric_limits<double>::infinity());
  s.min3d = Vector::Constant(d3, std::numeric_limits<double>::infinity());
  s.max3d = Vector::Constant(d3, -std::numeric_limits<double>::infinity());
  bool any3d = false;
  for (const auto& seq : train.sequences) {
    for (const auto& f : seq.frames) {
      s.min2d = s.min2d.cwiseMin(f.joints2d.coords());
      s.max2d = s.max2d.cwiseMax(f.joints2d.coords());
      if (f.joints3d) {
        any3d = true;
        s.min3d = s.min3d.cwiseMin(f.joints3d->coords());
        s.max3d = s.max3d.cwiseMax(f.joints3d->coords());
      }
    }
  }
  if (!any3d) throw std::invalid_argument("compute_norm_stats: training data has no 3D frames");
  return s;
}

Pose2D normalize_pose(const Pose2D& p, const NormStats& s) {
  return Pose2D(normalize_columns(p.coords(), s.min2d, s.max2d).col(0));
}
Pose3D normalize_pose(const Pose3D& p, const NormStats& s) {
  return Pose3D(normalize_columns(p.coords(), s.min3d, s.max3d).col(0));
}
Pose2D denormalize_pose(const Pose2D& p, const NormStats& s) {
  return Pose2D(denormalize_columns(p.coords(), s.min2d, s.max2d).col(0));
}
Pose3D denormalize_pose(const Pose3D& p, const NormStats& s) {
  return Pose3D(denormalize_columns(p.coords(), s.min3d, s.max3d).col(0));
}

}  // namespace poselift
