#pragma once

#include "poselift/pose.hpp"

#include <span>

namespace poselift {

enum class Alignment {
  centroid,  // optimal translation: match the joint centroids
  root,      // match the mean of the given root joints
};

// Mean per-joint Euclidean distance over all frames after per-frame
// translation alignment. Poses are in millimeters.
double mpjpe(std::span<const Pose3D> pred, std::span<const Pose3D> gt, Alignment align = Alignment::centroid,
             std::span<const int> root_joints = {});

}  // namespace poselift
