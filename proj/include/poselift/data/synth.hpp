#pragma once

#include "poselift/data/camera.hpp"
#include "poselift/data/dataset.hpp"

#include <cstdint>

namespace poselift {

struct SynthConfig {
  int num_seqs = 200;
  int frames = 64;
  int joints = 14;
  double noise_px = 2.0;
  double bone_scale = 1.0;        // multiplies every rest-pose bone
  double motion_amplitude = 1.0;  // multiplies every joint swing
  double motion_frequency = 0.05; // mean swing frequency, cycles per frame
  double root_spread_mm = 100.0;  // subjects stand within this radius of the origin
  PinholeCamera camera = PinholeCamera::standard();
};

// Sinusoidally animated skeletons posed by forward kinematics (mm, world
// frame), observed through the camera with Gaussian pixel noise. Motion and
// noise use separate random streams, so two configurations that differ only in
// noise_px share their 3D motion exactly.
SequenceDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace poselift
