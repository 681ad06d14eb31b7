#include "poselift/data/skeleton.hpp"

#include <algorithm>
#include <stdexcept>

namespace poselift {
namespace {

using V = Eigen::Vector3d;

// Upper arms and thighs swing about a slightly forward rest angle; forearms
// flex forward and shins backward only. Small twists elsewhere.
Skeleton make_humaneva14() {
  Skeleton s;
  s.joints = {
      {"head_top", 1, V(0, 230, 90), V(0.15, 0.2, 0.1)},
      {"neck", -1, V(0, 520, 0), V(0.2, 0.25, 0.12)},
      {"shoulder_right", 1, V(-180, -30, 0), V(0.05, 0.05, 0.05)},
      {"elbow_right", 2, V(0, -290, 0), V(0.5, 0.2, 0.3), V(-0.3, 0, 0)},
      {"wrist_right", 3, V(0, -250, 0), V(0.6, 0.1, 0.2), V(-0.9, 0, 0)},
      {"shoulder_left", 1, V(180, -30, 0), V(0.05, 0.05, 0.05)},
      {"elbow_left", 5, V(0, -290, 0), V(0.5, 0.2, 0.3), V(-0.3, 0, 0)},
      {"wrist_left", 6, V(0, -250, 0), V(0.6, 0.1, 0.2), V(-0.9, 0, 0)},
      {"hip_right", -1, V(-110, 0, 0), V(0.0, 0.0, 0.0)},
      {"knee_right", 8, V(0, -430, 0), V(0.45, 0.1, 0.1), V(-0.25, 0, 0)},
      {"ankle_right", 9, V(0, -420, 0), V(0.45, 0.05, 0.05), V(0.55, 0, 0)},
      {"hip_left", -1, V(110, 0, 0), V(0.0, 0.0, 0.0)},
      {"knee_left", 11, V(0, -430, 0), V(0.45, 0.1, 0.1), V(-0.25, 0, 0)},
      {"ankle_left", 12, V(0, -420, 0), V(0.45, 0.05, 0.05), V(0.55, 0, 0)},
  };
  return s;
}

Skeleton make_h36m17() {
  Skeleton s;
  s.joints = {
      {"pelvis", -1, V(0, 0, 0), V(0.0, 0.0, 0.0)},
      {"hip_right", 0, V(-110, 0, 0), V(0.0, 0.0, 0.0)},
      {"knee_right", 1, V(0, -430, 0), V(0.45, 0.1, 0.1), V(-0.25, 0, 0)},
      {"ankle_right", 2, V(0, -420, 0), V(0.45, 0.05, 0.05), V(0.55, 0, 0)},
      {"hip_left", 0, V(110, 0, 0), V(0.0, 0.0, 0.0)},
      {"knee_left", 4, V(0, -430, 0), V(0.45, 0.1, 0.1), V(-0.25, 0, 0)},
      {"ankle_left", 5, V(0, -420, 0), V(0.45, 0.05, 0.05), V(0.55, 0, 0)},
      {"spine", 0, V(0, 230, 0), V(0.15, 0.2, 0.08)},
      {"thorax", 7, V(0, 250, 0), V(0.1, 0.1, 0.05)},
      {"neck_nose", 8, V(0, 100, 60), V(0.15, 0.2, 0.1)},
      {"head", 9, V(0, 120, -40), V(0.1, 0.1, 0.1)},
      {"shoulder_left", 8, V(180, -30, 0), V(0.05, 0.05, 0.05)},
      {"elbow_left", 11, V(0, -290, 0), V(0.5, 0.2, 0.3), V(-0.3, 0, 0)},
      {"wrist_left", 12, V(0, -250, 0), V(0.6, 0.1, 0.2), V(-0.9, 0, 0)},
      {"shoulder_right", 8, V(-180, -30, 0), V(0.05, 0.05, 0.05)},
      {"elbow_right", 14, V(0, -290, 0), V(0.5, 0.2, 0.3), V(-0.3, 0, 0)},
      {"wrist_right", 15, V(0, -250, 0), V(0.6, 0.1, 0.2), V(-0.9, 0, 0)},
  };
  return s;
}

int index_of(const std::vector<std::string>& names, const std::string& n) {
  auto it = std::find(names.begin(), names.end(), n);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

}  // namespace

std::vector<std::string> Skeleton::names() const {
  std::vector<std::string> out;
  for (const auto& j : joints) out.push_back(j.name);
  return out;
}

const Skeleton& humaneva14() {
  static const Skeleton s = make_humaneva14();
  return s;
}

const Skeleton& h36m17() {
  static const Skeleton s = make_h36m17();
  return s;
}

const Skeleton& skeleton_for(int joints) {
  if (joints == 14) return humaneva14();
  if (joints == 17) return h36m17();
  throw std::invalid_argument("no built-in skeleton with " + std::to_string(joints) + " joints (use 14 or 17)");
}

std::vector<int> resolve_robust_joints(const std::vector<std::string>& names, std::string* note) {
  static const std::vector<std::string> wanted = {"pelvis", "shoulder_left", "shoulder_right", "hip_left",
                                                  "hip_right"};
  std::vector<int> out;
  std::string missing;
  for (const auto& w : wanted) {
    if (int i = index_of(names, w); i >= 0)
      out.push_back(i);
    else
      missing += (missing.empty() ? "" : ", ") + w;
  }
  if (note) {
    note->clear();
    if (!missing.empty()) *note = "robust joints: no " + missing + "; using the remaining hips and shoulders";
  }
  if (out.empty()) throw std::invalid_argument("no robust joints (pelvis/shoulders/hips) among joint names");
  return out;
}

std::vector<int> resolve_root_joints(const std::vector<std::string>& names) {
  if (int p = index_of(names, "pelvis"); p >= 0) return {p};
  int l = index_of(names, "hip_left"), r = index_of(names, "hip_right");
  if (l < 0 || r < 0) throw std::invalid_argument("root alignment needs a pelvis or both hips");
  return {l, r};
}

}  // namespace poselift
