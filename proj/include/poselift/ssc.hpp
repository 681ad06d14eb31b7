#pragma once

#include "poselift/normalize.hpp"
#include "poselift/nn/tensor.hpp"
#include "poselift/pose.hpp"

#include <span>
#include <string>
#include <vector>

namespace poselift {

enum class RefineOptimizer { adam, sgd };

// Per-frame test-time correction settings. Thresholds are in millimeters.
struct RefineConfig {
  int max_iters = 2;
  double step_size = 1e-2;
  double eps_mm = 5.0;
  double tau_mm = 20.0;
  RefineOptimizer optimizer = RefineOptimizer::adam;
  std::vector<int> robust_joints;

  // Throws std::invalid_argument on eps >= tau, max_iters < 1, an empty joint
  // set or a joint outside [0, joints).
  void validate(int joints) const;
};

enum class Verdict { refined, converged_early, discarded };
std::string to_string(Verdict v);

struct RefineReport {
  std::vector<double> losses;            // initial loss, then one per update
  std::vector<double> robust_change_mm;  // one per update
  Verdict verdict = Verdict::refined;
};

struct RefineResult {
  Pose3D pose;  // normalized units, like p3d
  RefineReport report;
};

// Mean Euclidean displacement of the listed joints.
double robust_joint_change(const Pose3D& before, const Pose3D& after, std::span<const int> joints);

// Projection loss ||p2d - Psi_P(Psi_C(p3d))||^2 with eval-mode batch norm.
double projection_loss(const Pose2D& p2d, const Pose3D& p3d, const ParamSet& params);

// Clones the regression/projection tensors of params, takes up to max_iters
// gradient steps on the projection loss of this frame and reads out
// Psi_C(p3d) with the updated clone. p2d and p3d are normalized; stats map
// Psi_C outputs to millimeters for the eps/tau checks. A trajectory whose
// robust-joint change ever exceeds tau (or whose loss turns non-finite) is
// discarded and the original Psi_C(p3d) is returned. params is not modified.
RefineResult refine_frame(const Pose2D& p2d, const Pose3D& p3d, const ParamSet& params, const NormStats& stats,
                          const RefineConfig& cfg);

}  // namespace poselift
