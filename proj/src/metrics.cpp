#include "poselift/data/metrics.hpp"

#include <stdexcept>
#include <string>

namespace poselift {
namespace {

Eigen::Vector3d anchor(const Pose3D& p, Alignment align, std::span<const int> root) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  if (align == Alignment::centroid) {
    for (int k = 0; k < p.joints(); ++k) sum += p.joint(k);
    return sum / p.joints();
  }
  for (int k : root) sum += p.joint(k);
  return sum / static_cast<double>(root.size());
}

}  // namespace

double mpjpe(std::span<const Pose3D> pred, std::span<const Pose3D> gt, Alignment align,
             std::span<const int> root_joints) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("mpjpe: " + std::to_string(pred.size()) + " predicted vs " +
                                std::to_string(gt.size()) + " ground-truth frames");
  if (pred.empty()) throw std::invalid_argument("mpjpe: no frames");
  if (align == Alignment::root) {
    if (root_joints.empty()) throw std::invalid_argument("mpjpe: root alignment needs root joints");
    for (int k : root_joints)
      if (k < 0 || k >= gt.front().joints()) throw std::invalid_argument("mpjpe: root joint out of range");
  }
  double total = 0.0;
  long count = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Pose3D& p = pred[t];
    const Pose3D& g = gt[t];
    if (p.joints() != g.joints() || p.joints() == 0)
      throw std::invalid_argument("mpjpe: frame " + std::to_string(t) + " has " + std::to_string(p.joints()) +
                                  " vs " + std::to_string(g.joints()) + " joints");
    const Eigen::Vector3d offset = anchor(g, align, root_joints) - anchor(p, align, root_joints);
    for (int k = 0; k < p.joints(); ++k) total += (p.joint(k) + offset - g.joint(k)).norm();
    count += p.joints();
  }
  return total / static_cast<double>(count);
}

}  // namespace poselift
