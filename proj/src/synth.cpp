#include "poselift/data/synth.hpp"

#include "poselift/data/skeleton.hpp"
#include "poselift/nn/layers.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace poselift {

void PinholeCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be positive");
  if (std::abs(R.determinant() - 1.0) > 1e-9 || !(R * R.transpose()).isIdentity(1e-9))
    throw std::invalid_argument("camera: R is not a rotation (det " + std::to_string(R.determinant()) + ")");
  if (!t.allFinite()) throw std::invalid_argument("camera: translation is not finite");
}

PinholeCamera PinholeCamera::standard() {
  PinholeCamera cam;
  cam.R = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  cam.t = Eigen::Vector3d(0.0, 1000.0, 5000.0);
  return cam;
}

Pose2D project_pinhole(const Pose3D& p3d, const PinholeCamera& cam) {
  Pose2D out = Pose2D::zeros(p3d.joints());
  for (int k = 0; k < p3d.joints(); ++k) {
    const Eigen::Vector3d xc = cam.R * p3d.joint(k) + cam.t;
    if (!(xc.z() > 0.0))
      throw BehindCameraError("joint " + std::to_string(k) + " has camera depth " + std::to_string(xc.z()));
    out.joint(k) = Eigen::Vector2d(cam.fx * xc.x() / xc.z() + cam.cx, cam.fy * xc.y() / xc.z() + cam.cy);
  }
  return out;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPelvisHeightMm = 950.0;
constexpr double kPelvisHeightSpreadMm = 150.0;
constexpr int kMaxPlacementAttempts = 100;
constexpr double kPlacementStepMm = 500.0;

Eigen::Matrix3d euler_xyz(const Eigen::Vector3d& a) {
  return (Eigen::AngleAxisd(a.z(), Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(a.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(a.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

struct SequenceMotion {
  Eigen::Vector3d root;
  double yaw, yaw_swing, sway_freq, sway_phase, freq, amplitude;
  std::vector<Eigen::Vector3d> phase;
  std::vector<double> freq_scale;
};

SequenceMotion draw_motion(const SynthConfig& cfg, const Skeleton& sk, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  SequenceMotion m;
  m.root = Eigen::Vector3d(range(-cfg.root_spread_mm, cfg.root_spread_mm),
                           kPelvisHeightMm + range(-kPelvisHeightSpreadMm, kPelvisHeightSpreadMm),
                           range(-cfg.root_spread_mm, cfg.root_spread_mm));
  m.yaw = range(-std::numbers::pi / 3, std::numbers::pi / 3);
  m.yaw_swing = range(0.0, 0.3);
  m.sway_freq = cfg.motion_frequency * range(0.2, 0.5);
  m.sway_phase = range(0.0, kTwoPi);
  m.freq = cfg.motion_frequency * range(0.6, 1.4);
  m.amplitude = cfg.motion_amplitude * range(0.6, 1.2);
  for (int j = 0; j < sk.size(); ++j) {
    m.phase.emplace_back(range(0.0, kTwoPi), range(0.0, kTwoPi), range(0.0, kTwoPi));
    m.freq_scale.push_back(range(0.8, 1.2));
  }
  return m;
}

// World-space joints of one frame by forward kinematics.
Pose3D pose_at(const Skeleton& sk, const SequenceMotion& m, const SynthConfig& cfg, int t,
               const Eigen::Vector3d& root_shift) {
  const double time = static_cast<double>(t);
  const double sway = std::sin(kTwoPi * m.sway_freq * time + m.sway_phase);
  const Eigen::Matrix3d root_rot =
      (Eigen::AngleAxisd(m.yaw + m.yaw_swing * sway, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(0.08 * sway, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  const Eigen::Vector3d root =
      m.root + root_shift + Eigen::Vector3d(80.0 * sway, 40.0 * sway * sway, 80.0 * std::cos(kTwoPi * m.sway_freq * time));

  const int n = sk.size();
  std::vector<Eigen::Matrix3d> rot(n);
  std::vector<Eigen::Vector3d> pos(n);
  std::vector<char> done(n, 0);
  Pose3D out = Pose3D::zeros(n);
  // Parents may be listed after their children; resolve on demand.
  auto solve = [&](auto&& self, int j) -> void {
    if (done[j]) return;
    const auto& joint = sk.joints[static_cast<std::size_t>(j)];
    Eigen::Matrix3d parent_rot = root_rot;
    Eigen::Vector3d parent_pos = root;
    if (joint.parent >= 0) {
      self(self, joint.parent);
      parent_rot = rot[joint.parent];
      parent_pos = pos[joint.parent];
    }
    const double phase = kTwoPi * m.freq * m.freq_scale[j] * time;
    const Eigen::Vector3d angles = joint.rest + m.amplitude * joint.swing.cwiseProduct(
                                                     Eigen::Vector3d(std::sin(phase + m.phase[j].x()),
                                                                     std::sin(phase + m.phase[j].y()),
                                                                     std::sin(phase + m.phase[j].z())));
    rot[j] = parent_rot * euler_xyz(angles);
    pos[j] = parent_pos + rot[j] * (cfg.bone_scale * joint.offset);
    done[j] = 1;
  };
  for (int j = 0; j < n; ++j) {
    solve(solve, j);
    out.joint(j) = pos[j];
  }
  return out;
}

}  // namespace

SequenceDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.camera.validate();
  if (cfg.frames < 1) throw std::invalid_argument("synth: frames must be at least 1");
  if (cfg.num_seqs < 1) throw std::invalid_argument("synth: need at least one sequence");
  if (cfg.noise_px < 0.0) throw std::invalid_argument("synth: noise must be non-negative");
  const Skeleton& sk = skeleton_for(cfg.joints);

  Rng motion_rng(seed);
  Rng noise_rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> noise(0.0, 1.0);
  // Direction that increases camera depth, in world coordinates.
  const Eigen::Vector3d away = cfg.camera.R.transpose() * Eigen::Vector3d::UnitZ();

  SequenceDataset ds;
  ds.k = cfg.joints;
  ds.joint_names = sk.names();
  for (int s = 0; s < cfg.num_seqs; ++s) {
    const SequenceMotion motion = draw_motion(cfg, sk, motion_rng);
    Sequence seq;
    seq.id = "s" + std::to_string(s);
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxPlacementAttempts)
        throw BehindCameraError("synth: sequence " + seq.id + " stays behind the camera after " +
                                std::to_string(kMaxPlacementAttempts) + " placements");
      const Eigen::Vector3d shift = (attempt * kPlacementStepMm) * away;
      seq.frames.clear();
      try {
        for (int t = 0; t < cfg.frames; ++t) {
          FrameRecord f;
          f.seq_id = seq.id;
          f.t = t;
          f.joints3d = pose_at(sk, motion, cfg, t, shift);
          f.joints2d = project_pinhole(*f.joints3d, cfg.camera);
          seq.frames.push_back(std::move(f));
        }
        break;
      } catch (const BehindCameraError&) {
        continue;
      }
    }
    if (cfg.noise_px > 0.0)
      for (auto& f : seq.frames)
        for (Eigen::Index i = 0; i < f.joints2d.coords().size(); ++i)
          f.joints2d.coords()(i) += cfg.noise_px * noise(noise_rng);
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace poselift
