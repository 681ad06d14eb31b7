#pragma once

#include "poselift/pose.hpp"

#include <Eigen/Geometry>

#include <stdexcept>

namespace poselift {

class BehindCameraError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// X_cam = R * X_world + t, then u = fx * x / z + cx, v = fy * y / z + cy.
struct PinholeCamera {
  double fx = 1000.0, fy = 1000.0;
  double cx = 500.0, cy = 500.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  // Throws std::invalid_argument unless fx, fy > 0 and R is a rotation.
  void validate() const;

  // Camera 5 m in front of a subject standing at the world origin (y up),
  // looking along world -z at pelvis height.
  static PinholeCamera standard();
};

Pose2D project_pinhole(const Pose3D& p3d, const PinholeCamera& cam);

}  // namespace poselift
