#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace poselift {

// One joint of a kinematic tree. offset is the rest-pose bone from the parent
// in millimeters (world y up). The synthetic animation rotates the bone by
// rest + swing * sin(...) per axis, in radians; the subject faces world +z. parent < 0 marks a child of the
// (virtual) root.
struct SkeletonJoint {
  std::string name;
  int parent;
  Eigen::Vector3d offset;
  Eigen::Vector3d swing;
  Eigen::Vector3d rest = Eigen::Vector3d::Zero();
};

struct Skeleton {
  std::vector<SkeletonJoint> joints;

  int size() const { return static_cast<int>(joints.size()); }
  std::vector<std::string> names() const;
};

// 14 joints: head top, neck, shoulders, elbows, wrists, hips, knees, ankles.
const Skeleton& humaneva14();
// 17 joints including pelvis, spine and thorax.
const Skeleton& h36m17();

// Skeleton for a joint count (14 or 17).
const Skeleton& skeleton_for(int joints);

// Indices of pelvis and left/right shoulders and hips present in names.
// Missing names are skipped; note (when given) describes any fallback.
std::vector<int> resolve_robust_joints(const std::vector<std::string>& names, std::string* note = nullptr);

// Joints whose mean defines the root for root alignment: pelvis if present,
// else both hips.
std::vector<int> resolve_root_joints(const std::vector<std::string>& names);

}  // namespace poselift
